#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxverify/label_grid.hpp"

namespace ctxverify {

// Stands in for a missing attribute value.
inline constexpr std::string_view kPlaceholder = "\xE2\x88\x85";  // U+2205

inline constexpr double kDefaultMinCoverage = 0.95;
inline constexpr double kDefaultMinBalance = 0.10;

// attribute name -> allowed values
using AttributeSchema = std::map<std::string, std::vector<std::string>>;
using AttributeRecord = std::map<std::string, std::string>;

// Four binary scene attributes: location, multiplicity, rigidity, visibility.
AttributeSchema default_attribute_schema();

// Accepts {attr: [values]}; a top-level "schema_version" key is ignored.
AttributeSchema parse_attribute_schema(std::string_view json_text);
std::string attribute_schema_to_json(const AttributeSchema& schema);

class AttributeTable {
public:
    explicit AttributeTable(AttributeSchema schema) : schema_(std::move(schema)) {}

    const AttributeSchema& schema() const { return schema_; }
    const std::map<std::string, AttributeRecord>& records() const { return records_; }
    bool has_attribute(const std::string& name) const { return schema_.contains(name); }

    // Fills unset attributes with the placeholder. Throws SchemaError or DuplicateError.
    void add(const std::string& image_id, const AttributeRecord& values);

    // Placeholder when the image or attribute has no value.
    const std::string& value(const std::string& image_id, const std::string& attribute) const;
    const AttributeRecord* record(const std::string& image_id) const;

private:
    AttributeSchema schema_;
    std::map<std::string, AttributeRecord> records_;
};

// Accepts a JSON array of {"image_id", "attributes"} or an object wrapping it
// under "records".
AttributeTable load_attributes(std::string_view json_text, const AttributeSchema& schema);
std::string attributes_to_json(const AttributeTable& table);

// Validates a single {name: value} record against the schema.
AttributeRecord parse_attribute_record(std::string_view json_text, const AttributeSchema& schema);

// Row-major L x A table of non-negative counts.
struct CountMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    CountMatrix() = default;
    CountMatrix(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

// Plug-in mutual information in nats. Throws EmptyDistributionError on an
// all-zero table.
double mutual_information(const CountMatrix& joint);

struct AttributeScore {
    std::string attribute;
    double mutual_information = 0.0;
    double coverage = 0.0;
    double balance = 0.0;
    int observed_values = 0;
    bool eligible = false;
};

struct ContextSelectionReport {
    std::vector<AttributeScore> attributes;  // schema order
    std::vector<std::string> ranking;        // eligible only, MI descending, name ascending on ties
    double min_coverage = kDefaultMinCoverage;
    double min_balance = kDefaultMinBalance;
};

struct SelectionThresholds {
    double min_coverage = kDefaultMinCoverage;
    double min_balance = kDefaultMinBalance;
};

// labels: image id -> object class multiset. One joint event per object.
ContextSelectionReport score_attributes(const AttributeTable& table,
                                        const std::map<std::string, std::vector<ClassId>>& labels,
                                        SelectionThresholds thresholds = {});

std::map<std::string, std::vector<std::string>> partition_corpus(const std::vector<std::string>& corpus_ids,
                                                                 const AttributeTable& table,
                                                                 const std::string& attribute);

}  // namespace ctxverify
