"""Smoke test for the pyobjmap extension module.

Build and install it first, e.g. `maturin develop -m crates/python/Cargo.toml`
or `pip install --no-build-isolation crates/python`, then run this script.
"""

import json
import pathlib
import sys
import tempfile

import pyobjmap

ROOT = pathlib.Path(__file__).resolve().parent.parent
DESK = ROOT / "crates" / "core" / "scenes" / "desk.json"


def check(cond, what):
    if not cond:
        sys.exit(f"FAILED: {what}")
    print(f"ok  {what}")


def main():
    check(pyobjmap.felzenszwalb(3, [(0, 1, 0.0), (1, 2, 1.0)], 0.5) == [0, 0, 1],
          "three-node Kruskal cut")

    value, relation = pyobjmap.edge_weight([0, 0, 0], [0, 0, 1], [0.1, 0, 0], [0, 0, 1],
                                           plane_i=0, plane_j=0)
    check((value, relation) == (0.0, "same-plane"), "edge weight on a shared plane")

    model = [[0.1 * i, 0.0, 0.0] for i in range(4)]
    half = [[0.0, 0.02, 0.0], [0.1, 0.02, 0.0], [0.2, 0.05, 0.0], [0.3, 0.05, 0.0]]
    check(pyobjmap.match_fraction(half, model) == 0.5, "match fraction at the 2 cm boundary")

    try:
        pyobjmap.PipelineConfig.from_json('{"segmentation": {"k": -1}}')
        check(False, "bad config rejected")
    except ValueError as e:
        check("segmentation.k" in str(e), "bad config rejected with field name")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        scene = json.loads(DESK.read_text())
        scene["trajectory"]["frames"] = 4
        (tmp / "scene.json").write_text(json.dumps(scene))
        summary = pyobjmap.synthesize(tmp / "scene.json", tmp / "data")
        check(summary["keyframes"] == 4, "synthetic dataset written")

        cfg = pyobjmap.PipelineConfig()
        smap, reports = pyobjmap.run_sequence(tmp / "data", cfg)
        check(len(reports) == 4, "one report per keyframe")
        check(len(smap) > 0, f"map has {len(smap)} landmarks")

        lm = smap.landmark(smap.landmark_ids()[0])
        check(0.0 < lm["confidence"] <= 1.0, f"landmark 0 is a {lm['class_name']}")

        out = tmp / "out"
        out.mkdir()
        (out / "inventory.json").write_text(json.dumps(smap.inventory()))
        score = pyobjmap.evaluate(out, tmp / "data" / "ground_truth.json")
        check(score["false_pos"] == 0, f"tp={score['true_pos']} fp={score['false_pos']} fn={score['false_neg']}")

        g = smap.generate_map()
        check(len(g["objects"]) == len(g["class_ids"]) == len(g["object_ids"]), "generated map is consistent")

        smap.save(out / "map.json")
        check(len(pyobjmap.SemanticMap.load(out / "map.json")) == len(smap), "map JSON round trip")

    print("all checks passed")


if __name__ == "__main__":
    main()
