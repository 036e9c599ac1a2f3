#include "ctxverify/context.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "ctxverify/error.hpp"

namespace ctxverify {

namespace {

using nlohmann::json;

json parse_json(std::string_view text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

const std::string& placeholder() {
    static const std::string p(kPlaceholder);
    return p;
}

AttributeRecord record_from_json(const json& attrs, const AttributeSchema& schema) {
    if (!attrs.is_object()) throw FormatError("attributes must be a JSON object");
    AttributeRecord out;
    for (auto it = attrs.begin(); it != attrs.end(); ++it) {
        if (!schema.contains(it.key())) throw SchemaError("attribute '" + it.key() + "' not in schema");
        if (it.value().is_null()) {
            out[it.key()] = placeholder();
        } else if (it.value().is_string()) {
            out[it.key()] = it.value().get<std::string>();
        } else {
            throw FormatError("attribute '" + it.key() + "' must be a string or null");
        }
    }
    return out;
}

}  // namespace

AttributeSchema default_attribute_schema() {
    return {
        {"location", {"inside", "outside"}},
        {"multiplicity", {"single", "multiple"}},
        {"rigidity", {"soft", "hard"}},
        {"visibility", {"full", "partial"}},
    };
}

AttributeSchema parse_attribute_schema(std::string_view json_text) {
    json doc = parse_json(json_text, "attribute schema");
    if (doc.is_object() && doc.contains("schema") && doc["schema"].is_object()) doc = doc["schema"];
    if (!doc.is_object()) throw FormatError("attribute schema must be a JSON object");
    AttributeSchema schema;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.key() == "schema_version") continue;
        if (!it.value().is_array() || it.value().empty()) {
            throw FormatError("attribute '" + it.key() + "' needs a non-empty array of values");
        }
        std::vector<std::string> values;
        for (const auto& v : it.value()) {
            if (!v.is_string()) throw FormatError("attribute values must be strings");
            values.push_back(v.get<std::string>());
            if (values.back() == placeholder() || values.back().empty()) {
                throw SchemaError("attribute values may not be empty or the placeholder");
            }
        }
        schema[it.key()] = std::move(values);
    }
    return schema;
}

std::string attribute_schema_to_json(const AttributeSchema& schema) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    for (const auto& [name, values] : schema) doc[name] = values;
    return doc.dump(2) + "\n";
}

void AttributeTable::add(const std::string& image_id, const AttributeRecord& values) {
    if (records_.contains(image_id)) throw DuplicateError("duplicate image_id '" + image_id + "'");
    AttributeRecord rec;
    for (const auto& [name, allowed] : schema_) {
        auto it = values.find(name);
        if (it == values.end() || it->second.empty() || it->second == placeholder()) {
            rec[name] = placeholder();
            continue;
        }
        if (std::find(allowed.begin(), allowed.end(), it->second) == allowed.end()) {
            throw SchemaError("value '" + it->second + "' not allowed for attribute '" + name + "'");
        }
        rec[name] = it->second;
    }
    for (const auto& [name, _] : values) {
        if (!schema_.contains(name)) throw SchemaError("attribute '" + name + "' not in schema");
    }
    records_.emplace(image_id, std::move(rec));
}

const AttributeRecord* AttributeTable::record(const std::string& image_id) const {
    auto it = records_.find(image_id);
    return it == records_.end() ? nullptr : &it->second;
}

const std::string& AttributeTable::value(const std::string& image_id, const std::string& attribute) const {
    const AttributeRecord* rec = record(image_id);
    if (!rec) return placeholder();
    auto it = rec->find(attribute);
    return it == rec->end() ? placeholder() : it->second;
}

AttributeTable load_attributes(std::string_view json_text, const AttributeSchema& schema) {
    json doc = parse_json(json_text, "attribute annotations");
    if (doc.is_object() && doc.contains("records")) doc = doc["records"];
    if (!doc.is_array()) throw FormatError("attribute annotations must be a JSON array");
    AttributeTable table(schema);
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("image_id") || !entry["image_id"].is_string()) {
            throw FormatError("each annotation needs a string image_id");
        }
        AttributeRecord rec;
        if (entry.contains("attributes")) rec = record_from_json(entry["attributes"], schema);
        table.add(entry["image_id"].get<std::string>(), rec);
    }
    return table;
}

std::string attributes_to_json(const AttributeTable& table) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    nlohmann::ordered_json schema = nlohmann::ordered_json::object();
    for (const auto& [name, values] : table.schema()) schema[name] = values;
    doc["schema"] = schema;
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const auto& [id, rec] : table.records()) {
        nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
        for (const auto& [name, value] : rec) attrs[name] = value;
        records.push_back({{"image_id", id}, {"attributes", attrs}});
    }
    doc["records"] = records;
    return doc.dump(2) + "\n";
}

AttributeRecord parse_attribute_record(std::string_view json_text, const AttributeSchema& schema) {
    json doc = parse_json(json_text, "attribute record");
    if (doc.is_object() && doc.contains("attributes")) doc = doc["attributes"];
    AttributeTable probe(schema);
    probe.add("probe", record_from_json(doc, schema));
    return *probe.record("probe");
}

double mutual_information(const CountMatrix& joint) {
    if (joint.values.size() != static_cast<std::size_t>(joint.rows) * joint.cols) {
        throw DimensionError("count matrix shape mismatch");
    }
    std::vector<double> row_sum(static_cast<std::size_t>(joint.rows), 0.0);
    std::vector<double> col_sum(static_cast<std::size_t>(joint.cols), 0.0);
    double total = 0.0;
    for (int r = 0; r < joint.rows; ++r) {
        for (int c = 0; c < joint.cols; ++c) {
            const double v = joint.at(r, c);
            if (v < 0 || !std::isfinite(v)) throw FormatError("counts must be finite and non-negative");
            row_sum[r] += v;
            col_sum[c] += v;
            total += v;
        }
    }
    if (total <= 0.0) throw EmptyDistributionError("mutual information of an empty count table");

    double mi = 0.0;
    for (int r = 0; r < joint.rows; ++r) {
        for (int c = 0; c < joint.cols; ++c) {
            const double v = joint.at(r, c);
            if (v == 0.0) continue;
            mi += (v / total) * std::log(v * total / (row_sum[r] * col_sum[c]));
        }
    }
    return std::max(mi, 0.0);
}

ContextSelectionReport score_attributes(const AttributeTable& table,
                                        const std::map<std::string, std::vector<ClassId>>& labels,
                                        SelectionThresholds thresholds) {
    if (labels.empty()) throw EmptyCorpusError("no labeled images to score attributes on");

    std::set<ClassId> class_set;
    for (const auto& [_, classes] : labels) class_set.insert(classes.begin(), classes.end());
    const std::vector<ClassId> class_list(class_set.begin(), class_set.end());
    auto class_row = [&](ClassId id) {
        return static_cast<int>(std::lower_bound(class_list.begin(), class_list.end(), id) - class_list.begin());
    };

    ContextSelectionReport report;
    report.min_coverage = thresholds.min_coverage;
    report.min_balance = thresholds.min_balance;
    const double n_images = static_cast<double>(labels.size());

    for (const auto& [name, allowed] : table.schema()) {
        const int n_values = static_cast<int>(allowed.size()) + 1;  // last column is the placeholder
        CountMatrix joint(static_cast<int>(class_list.size()), n_values);
        std::vector<int> images_per_value(static_cast<std::size_t>(n_values), 0);

        for (const auto& [image_id, classes] : labels) {
            if (!table.record(image_id)) throw SchemaError("no attribute record for image '" + image_id + "'");
            const std::string& v = table.value(image_id, name);
            const auto pos = std::find(allowed.begin(), allowed.end(), v);
            const int col = static_cast<int>(pos - allowed.begin());  // == size() for the placeholder
            ++images_per_value[static_cast<std::size_t>(col)];
            for (ClassId cls : classes) joint.at(class_row(cls), col) += 1.0;
        }

        AttributeScore score;
        score.attribute = name;
        const int defined = static_cast<int>(labels.size()) - images_per_value.back();
        score.coverage = defined / n_images;
        int rarest = defined;
        for (int v = 0; v + 1 < n_values; ++v) {
            if (images_per_value[static_cast<std::size_t>(v)] == 0) continue;
            ++score.observed_values;
            rarest = std::min(rarest, images_per_value[static_cast<std::size_t>(v)]);
        }
        score.balance = defined > 0 ? static_cast<double>(rarest) / defined : 0.0;
        const bool any_object = std::any_of(joint.values.begin(), joint.values.end(), [](double x) { return x > 0; });
        score.mutual_information = any_object ? mutual_information(joint) : 0.0;
        score.eligible = score.coverage >= thresholds.min_coverage && score.balance >= thresholds.min_balance &&
                         score.observed_values >= 2;
        report.attributes.push_back(score);
    }

    std::vector<const AttributeScore*> eligible;
    for (const auto& s : report.attributes) {
        if (s.eligible) eligible.push_back(&s);
    }
    std::sort(eligible.begin(), eligible.end(), [](const AttributeScore* x, const AttributeScore* y) {
        if (x->mutual_information != y->mutual_information) return x->mutual_information > y->mutual_information;
        return x->attribute < y->attribute;
    });
    for (const auto* s : eligible) report.ranking.push_back(s->attribute);
    return report;
}

std::map<std::string, std::vector<std::string>> partition_corpus(const std::vector<std::string>& corpus_ids,
                                                                 const AttributeTable& table,
                                                                 const std::string& attribute) {
    if (!table.has_attribute(attribute)) throw SchemaError("attribute '" + attribute + "' not in schema");
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& id : corpus_ids) groups[table.value(id, attribute)].push_back(id);
    return groups;
}

}  // namespace ctxverify
