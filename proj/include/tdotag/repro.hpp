#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

/// Reproduction of published tables and figures from model outputs.
namespace tdotag::repro {

enum class Verdict { pass, fail, flagged };
std::string_view verdict_name(Verdict v);

/// How a published cell is compared with the model value.
/// `input` rows feed the model and are not compared.
enum class Expect { match, at_least, at_most, mismatch, input };
Expect parse_expect(std::string_view name);

struct PublishedValue {
    std::string key;
    double value;
    double tolerance;
    std::string unit;
    Expect expect;
    std::string note;
};

std::vector<PublishedValue> load_published(const std::filesystem::path& csv);

struct DiffRow {
    std::string key;
    std::optional<double> model;
    double published;
    double tolerance;
    std::string unit;
    Expect expect;
    Verdict verdict;
    std::string note;
};

struct ModelOutput {
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::string> series_header;
    std::vector<std::vector<double>> series;

    void set(std::string key, double value);
    std::optional<double> get(std::string_view key) const;
};

struct ReproResult {
    std::string id;
    std::string title;
    Verdict status;
    ModelOutput model;
    std::vector<DiffRow> diff;
    std::vector<std::filesystem::path> files;
};

const std::vector<std::string>& registry();
bool is_registered(std::string_view id);

std::vector<DiffRow> compare(const ModelOutput& model, const std::vector<PublishedValue>& published);
Verdict overall(const std::vector<DiffRow>& diff);

/// Computes the model values for `id` and diffs them against the published fixture.
/// Writes `<id>_model.csv`, `<id>_published.csv`, `<id>_diff.csv` (and `<id>_series.csv`
/// for curves) when out_dir is set. Unknown ids raise InputError naming the registry.
ReproResult run_repro(const std::string& id, const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                      std::uint64_t seed = 20250401);

} // namespace tdotag::repro
