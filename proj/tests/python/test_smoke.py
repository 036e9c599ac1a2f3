import pytest

import ctxverify as cv

CLASSES = {1: "cat", 2: "sofa"}


def scene():
    rows = [[0] * 12 for _ in range(10)]
    for r in range(6, 10):
        for c in range(1, 11):
            rows[r][c] = 2
    for r in range(3, 6):
        for c in range(4, 7):
            rows[r][c] = 1
    return cv.LabelGrid(rows, CLASSES, "s0")


def test_grid_round_trip(tmp_path):
    g = scene()
    assert (g.height, g.width) == (10, 12)
    again = cv.LabelGrid.parse(g.to_text(), CLASSES, "s0")
    assert again == g
    path = tmp_path / "s0.txt"
    g.save(str(path))
    assert cv.LabelGrid.load(str(path), CLASSES).rows() == g.rows()


def test_unknown_class_rejected():
    with pytest.raises(cv.UnknownClassError):
        cv.LabelGrid([[0, 7]], CLASSES)
    with pytest.raises(cv.Error):
        cv.LabelGrid([[0, 1], [1]], CLASSES)


def test_scene_relations():
    objs = cv.extract_objects(scene(), 1)
    assert sorted(o["pixel_count"] for o in objs) == [9, 40]
    s = cv.analyze_scene(scene(), 1)
    assert len(s["relations"]) == 2
    cat_on_sofa = next(r for r in s["relations"] if r["a_class"] == 1)
    assert cat_on_sofa["rprox"] == "ON"
    assert cat_on_sofa["rpos"] == "S"
    assert all(abs(sum(h) - 1.0) < 1e-12 for h in s["shapes"])
    assert cv.octant((0.0, 0.0), (0.0, 5.0)) == "E"


def test_mutual_information():
    assert cv.mutual_information([[1, 1], [1, 1]]) == pytest.approx(0.0, abs=1e-15)
    assert cv.mutual_information([[1, 0], [0, 1]]) == pytest.approx(0.6931471805599453, abs=1e-12)


def test_contradiction_removes_one_object():
    g, info = cv.generate_contradiction(scene(), 3, 1)
    assert info["removed_class"] in CLASSES
    assert len(cv.extract_objects(g, 1)) == 1


def test_pipeline(tmp_path):
    corpus = tmp_path / "corpus"
    sizes = cv.synth_corpus(str(corpus), 1)
    assert len(sizes["train"]) > 0 and len(sizes["val"]) > 0

    sel = cv.select_contexts(str(corpus))
    assert sel["ranking"][0] == "location"

    reg = cv.train(str(corpus), 1, context="location")
    assert set(reg.contexts) == {"inside", "outside"}
    reg.save(str(tmp_path / "reg.json"))
    loaded = cv.Registry.load(str(tmp_path / "reg.json"))

    g = cv.LabelGrid.load(str(corpus / "images" / (sizes["val"][0] + ".lgrid")), loaded.class_map)
    v = loaded.verify(g, {"location": "inside"})
    assert v["model_used"] in ("inside", "global")
    assert v == reg.verify(g, {"location": "inside"})

    report = cv.evaluate(loaded, str(corpus), 1, threads=2)
    assert report == cv.evaluate(reg, str(corpus), 1)
    assert 0.0 <= report["global"]["accuracy"] <= 1.0 + 1e-12


def test_bad_registry(tmp_path):
    p = tmp_path / "reg.json"
    p.write_text('{"schema_version": 999, "kind": "verifier_registry"}')
    with pytest.raises(cv.VersionError):
        cv.Registry.load(str(p))
