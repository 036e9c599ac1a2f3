#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ctxverify/context.hpp"
#include "ctxverify/corpus.hpp"
#include "ctxverify/error.hpp"
#include "ctxverify/persistence.hpp"
#include "ctxverify/pipeline.hpp"
#include "ctxverify/relations.hpp"
#include "ctxverify/synth.hpp"
#include "ctxverify/verifier.hpp"

namespace py = pybind11;
using namespace ctxverify;

namespace {

py::dict object_dict(const SceneObject& o) {
    py::dict d;
    d["object_id"] = o.object_id;
    d["class_id"] = o.class_id;
    d["pixel_count"] = o.pixel_count;
    d["centroid"] = py::make_tuple(o.centroid.row, o.centroid.col);
    d["bbox"] = py::make_tuple(o.bbox.min_row, o.bbox.min_col, o.bbox.max_row, o.bbox.max_col);
    return d;
}

py::dict relation_dict(const PairRelation& r) {
    py::dict d;
    d["a_object"] = r.a_object;
    d["b_object"] = r.b_object;
    d["a_class"] = r.a_class;
    d["b_class"] = r.b_class;
    d["rpos"] = std::string(to_string(r.rpos));
    d["rprox"] = std::string(to_string(r.rprox));
    d["rsize"] = r.rsize;
    d["rdist"] = r.rdist;
    d["rdist_bin"] = r.rdist_bin;
    return d;
}

py::dict verdict_dict(const Verdict& v) {
    py::list pairs;
    for (const auto& p : v.pair_scores) {
        py::dict d;
        d["a_object"] = p.a_object;
        d["b_object"] = p.b_object;
        d["a_class"] = p.a_class;
        d["b_class"] = p.b_class;
        d["margin"] = p.margin;
        pairs.append(d);
    }
    py::dict d;
    d["image_id"] = v.image_id;
    d["contradiction"] = v.contradiction;
    d["confidence"] = v.confidence;
    d["model_used"] = v.model_used;
    d["pair_scores"] = pairs;
    return d;
}

LabelGrid grid_from_rows(const std::vector<std::vector<ClassId>>& rows, const ClassMap& class_map,
                         std::string image_id) {
    const int h = static_cast<int>(rows.size());
    const int w = h == 0 ? 0 : static_cast<int>(rows.front().size());
    std::vector<ClassId> cells;
    cells.reserve(static_cast<std::size_t>(h) * w);
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != w) throw FormatError("rows must all have the same length");
        cells.insert(cells.end(), row.begin(), row.end());
    }
    return LabelGrid(std::move(image_id), h, w, std::move(cells), class_map);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Semantic consistency verification of segmentation label maps";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
    py::register_exception<VersionError>(m, "VersionError", base.ptr());
    py::register_exception<UnknownClassError>(m, "UnknownClassError", base.ptr());
    py::register_exception<NotEnoughObjectsError>(m, "NotEnoughObjectsError", base.ptr());
    py::register_exception<EmptyCorpusError>(m, "EmptyCorpusError", base.ptr());
    py::register_exception<EmptyDistributionError>(m, "EmptyDistributionError", base.ptr());
    py::register_exception<DegenerateTrainingError>(m, "DegenerateTrainingError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());

    py::class_<LabelGrid>(m, "LabelGrid")
        .def(py::init(&grid_from_rows), py::arg("rows"), py::arg("class_map"), py::arg("image_id") = "")
        .def_static(
            "parse",
            [](const std::string& text, const ClassMap& class_map, std::string image_id) {
                return parse_label_grid(text, class_map, std::move(image_id));
            },
            py::arg("text"), py::arg("class_map"), py::arg("image_id") = "")
        .def_static("load", &load_label_grid, py::arg("path"), py::arg("class_map"))
        .def("save", [](const LabelGrid& g, const std::string& path) { save_label_grid(path, g); })
        .def("to_text", &format_label_grid)
        .def_property_readonly("image_id", &LabelGrid::image_id)
        .def_property_readonly("height", &LabelGrid::height)
        .def_property_readonly("width", &LabelGrid::width)
        .def_property_readonly("class_map", &LabelGrid::class_map)
        .def("rows",
             [](const LabelGrid& g) {
                 std::vector<std::vector<ClassId>> out(static_cast<std::size_t>(g.height()));
                 for (int r = 0; r < g.height(); ++r) {
                     for (int c = 0; c < g.width(); ++c) out[r].push_back(g.at(r, c));
                 }
                 return out;
             })
        .def("__eq__", [](const LabelGrid& a, const LabelGrid& b) { return a == b; });

    m.def(
        "extract_objects",
        [](const LabelGrid& g, int min_area) {
            py::list out;
            for (const auto& o : extract_objects(g, min_area)) out.append(object_dict(o));
            return out;
        },
        py::arg("grid"), py::arg("min_area") = kDefaultMinArea);

    m.def(
        "analyze_scene",
        [](const LabelGrid& g, int min_area, int distance_bins) {
            const auto scene = analyze_scene(g, min_area, distance_bins);
            py::list objects, relations, shapes;
            for (const auto& o : scene.objects) objects.append(object_dict(o));
            for (const auto& r : scene.relations) relations.append(relation_dict(r));
            for (const auto& s : scene.shapes) shapes.append(py::cast(s.bins));
            py::dict d;
            d["objects"] = objects;
            d["relations"] = relations;
            d["shapes"] = shapes;
            return d;
        },
        py::arg("grid"), py::arg("min_area") = kDefaultMinArea, py::arg("distance_bins") = kDefaultDistanceBins);

    m.def(
        "octant",
        [](std::pair<double, double> a, std::pair<double, double> b) {
            return std::string(to_string(octant({a.first, a.second}, {b.first, b.second})));
        },
        py::arg("a_centroid"), py::arg("b_centroid"), "Octant of b as seen from a; centroids are (row, col).");

    m.def(
        "mutual_information",
        [](const std::vector<std::vector<double>>& table) {
            CountMatrix cm(static_cast<int>(table.size()), table.empty() ? 0 : static_cast<int>(table[0].size()));
            for (int r = 0; r < cm.rows; ++r) {
                if (static_cast<int>(table[r].size()) != cm.cols) throw DimensionError("ragged count table");
                for (int c = 0; c < cm.cols; ++c) cm.at(r, c) = table[r][c];
            }
            return mutual_information(cm);
        },
        py::arg("table"));

    m.def(
        "generate_contradiction",
        [](const LabelGrid& g, std::uint64_t seed, int min_area) {
            auto c = generate_contradiction(g, seed, min_area);
            py::dict info;
            info["removed_class"] = c.removed_class;
            info["removed_object"] = c.removed_object;
            info["removed_pixels"] = c.removed_pixels;
            return py::make_tuple(std::move(c.grid), info);
        },
        py::arg("grid"), py::arg("seed"), py::arg("min_area") = kDefaultMinArea);

    m.def(
        "synth_corpus",
        [](const std::string& out_dir, std::uint64_t seed, const std::optional<std::string>& config_path) {
            const auto cfg =
                config_path ? parse_synthetic_config(read_text_file(*config_path)) : default_synthetic_config();
            const Corpus c = synth_corpus(cfg, out_dir, seed);
            py::dict d;
            d["train"] = c.train;
            d["val"] = c.val;
            return d;
        },
        py::arg("out_dir"), py::arg("seed"), py::arg("config_path") = py::none());

    m.def(
        "select_contexts",
        [](const std::string& corpus_dir, double min_coverage, double min_balance, int min_area) {
            const Corpus c = load_corpus(corpus_dir);
            std::map<std::string, std::vector<ClassId>> labels;
            for (const auto& id : c.all_ids()) {
                auto& classes = labels[id];
                for (const auto& o : extract_objects(c.load_scene(id), min_area)) classes.push_back(o.class_id);
            }
            const auto report = score_attributes(c.attributes, labels, {min_coverage, min_balance});
            py::list attrs;
            for (const auto& a : report.attributes) {
                py::dict d;
                d["attribute"] = a.attribute;
                d["mutual_information"] = a.mutual_information;
                d["coverage"] = a.coverage;
                d["balance"] = a.balance;
                d["observed_values"] = a.observed_values;
                d["eligible"] = a.eligible;
                attrs.append(d);
            }
            py::dict d;
            d["attributes"] = attrs;
            d["ranking"] = report.ranking;
            return d;
        },
        py::arg("corpus_dir"), py::arg("min_coverage") = kDefaultMinCoverage,
        py::arg("min_balance") = kDefaultMinBalance, py::arg("min_area") = kDefaultMinArea);

    py::class_<VerifierRegistry>(m, "Registry")
        .def_static("load", &load_registry, py::arg("path"))
        .def("save", [](const VerifierRegistry& r, const std::string& path) { save_registry(path, r); })
        .def_property_readonly("context_attribute", [](const VerifierRegistry& r) { return r.context_attribute; })
        .def_property_readonly("contexts",
                               [](const VerifierRegistry& r) {
                                   std::vector<std::string> out;
                                   for (const auto& [k, _] : r.contexts) out.push_back(k);
                                   return out;
                               })
        .def_property_readonly("class_map", [](const VerifierRegistry& r) { return r.class_map; })
        .def(
            "verify",
            [](const VerifierRegistry& r, const LabelGrid& g, const std::optional<AttributeRecord>& attributes) {
                return verdict_dict(verify(g, r, attributes ? &*attributes : nullptr));
            },
            py::arg("grid"), py::arg("attributes") = py::none());

    m.def(
        "train",
        [](const std::string& corpus_dir, std::uint64_t seed, const std::optional<std::string>& context,
           const std::string& aggregation, double learning_rate, int epochs, double l2_lambda, double alpha,
           int min_area, int distance_bins, int min_context_images) {
            const Corpus c = load_corpus(corpus_dir);
            TrainOptions opts;
            opts.hyperparams.learning_rate = learning_rate;
            opts.hyperparams.epochs = epochs;
            opts.hyperparams.l2_lambda = l2_lambda;
            opts.alpha = alpha;
            opts.min_area = min_area;
            opts.distance_bins = distance_bins;
            opts.min_context_images = min_context_images;
            opts.aggregation = aggregation_from_string(aggregation);
            py::gil_scoped_release release;
            return train_registry(c.load_split(Split::Train), c.attributes, context, opts, seed);
        },
        py::arg("corpus_dir"), py::arg("seed"), py::arg("context") = py::none(), py::arg("aggregation") = "majority",
        py::arg("learning_rate") = 0.01, py::arg("epochs") = 50, py::arg("l2_lambda") = 1e-3,
        py::arg("alpha") = kDefaultAlpha, py::arg("min_area") = kDefaultMinArea,
        py::arg("distance_bins") = kDefaultDistanceBins, py::arg("min_context_images") = 30);

    m.def(
        "evaluate_json",
        [](const VerifierRegistry& r, const std::string& corpus_dir, std::uint64_t seed, const std::string& split,
           unsigned threads) {
            if (split != "train" && split != "val") throw FormatError("split must be 'train' or 'val'");
            const Corpus c = load_corpus(corpus_dir);
            const auto scenes = c.load_split(split == "train" ? Split::Train : Split::Val);
            py::gil_scoped_release release;
            return run_report_to_json(evaluate(r, scenes, c.attributes, seed, threads));
        },
        py::arg("registry"), py::arg("corpus_dir"), py::arg("seed"), py::arg("split") = "val",
        py::arg("threads") = 1);
}
