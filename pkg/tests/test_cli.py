import math

import pytest

from rotdet import (
    Detection,
    RotatedBox,
    link_text_segments,
    parse_detections,
    serialize_detections,
    serialize_msra,
    skew_iou,
    skew_nms,
    GroundTruthInstance,
)
from rotdet.cli import main, parse_angle

PI = math.pi


def write_dets(path, dets):
    path.write_text(serialize_detections(dets), encoding="utf-8")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParseAngle:
    def test_radians(self):
        assert parse_angle("0.5") == 0.5

    def test_degrees(self):
        assert parse_angle("15deg") == pytest.approx(PI / 12)
        assert parse_angle(" 90DEG ") == pytest.approx(PI / 2)


class TestIouCommand:
    def test_matches_library(self, tmp_path, capsys):
        a = [RotatedBox(0, 0, 8, 64, 0), RotatedBox(5, 5, 10, 20, 0.3)]
        b = [RotatedBox(0, 0, 8, 64, PI / 12)]
        write_dets(tmp_path / "a.txt", [Detection(x, 1.0) for x in a])
        write_dets(tmp_path / "b.txt", [Detection(x, 1.0) for x in b])
        code, out, _ = run(
            capsys, "iou", str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
        )
        assert code == 0
        rows = [[float(v) for v in line.split()] for line in out.splitlines()]
        for i, box_a in enumerate(a):
            for j, box_b in enumerate(b):
                assert rows[i][j] == pytest.approx(skew_iou(box_a, box_b), abs=1e-6)

    def test_msra_format(self, tmp_path, capsys):
        gts = [GroundTruthInstance(RotatedBox(100, 50, 20, 80, 0.1))]
        (tmp_path / "gt.txt").write_text(serialize_msra(gts), encoding="utf-8")
        code, out, _ = run(
            capsys, "iou", str(tmp_path / "gt.txt"), str(tmp_path / "gt.txt"),
            "--format", "msra",
        )
        assert code == 0
        assert out.strip() == "1.000000"

    def test_missing_file_errors(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "iou", str(tmp_path / "nope.txt"), str(tmp_path / "nope.txt")
        )
        assert code == 1 and "error:" in err

    def test_malformed_file_errors(self, tmp_path, capsys):
        (tmp_path / "bad.txt").write_text("1 2 3\n", encoding="utf-8")
        code, _, err = run(
            capsys, "iou", str(tmp_path / "bad.txt"), str(tmp_path / "bad.txt")
        )
        assert code == 1 and "error:" in err


class TestNmsCommand:
    def test_matches_library(self, tmp_path, capsys):
        dets = [
            Detection(RotatedBox(0, 0, 8, 64, 0), 0.9),
            Detection(RotatedBox(0, 0, 8, 64, PI / 24), 0.8),
            Detection(RotatedBox(200, 200, 8, 64, 0), 0.7),
        ]
        write_dets(tmp_path / "d.txt", dets)
        code, out, _ = run(capsys, "nms", str(tmp_path / "d.txt"))
        assert code == 0
        kept_cli = parse_detections(out)
        kept_lib = skew_nms(dets)
        assert serialize_detections(kept_cli) == serialize_detections(kept_lib)
        assert len(kept_cli) == 2

    def test_angle_limit_flag(self, tmp_path, capsys):
        dets = [
            Detection(RotatedBox(0, 0, 8, 64, 0), 0.9),
            Detection(RotatedBox(0, 0, 8, 64, PI / 24), 0.8),
        ]
        write_dets(tmp_path / "d.txt", dets)
        # tighten the angle gate below pi/24 so both survive
        code, out, _ = run(
            capsys, "nms", str(tmp_path / "d.txt"), "--angle-limit", "5deg"
        )
        assert code == 0
        assert len(parse_detections(out)) == 2


class TestLinkCommand:
    def test_matches_library(self, tmp_path, capsys):
        boxes = [RotatedBox(0, 0, 10, 50, 0), RotatedBox(40, 0, 10, 50, 0)]
        write_dets(tmp_path / "d.txt", [Detection(b, 0.9) for b in boxes])
        code, out, _ = run(capsys, "link", str(tmp_path / "d.txt"))
        assert code == 0
        merged_cli = [d.box for d in parse_detections(out)]
        merged_lib = link_text_segments(boxes)
        assert len(merged_cli) == len(merged_lib) == 1
        for a, b in zip(merged_cli[0].astuple(), merged_lib[0].astuple()):
            assert a == pytest.approx(b, abs=1e-6)


class TestAugmentCommand:
    def test_enlarge_only(self, tmp_path, capsys):
        gts = [GroundTruthInstance(RotatedBox(100, 50, 10, 50, 0.2))]
        (tmp_path / "gt.txt").write_text(serialize_msra(gts), encoding="utf-8")
        code, out, _ = run(
            capsys, "augment", str(tmp_path / "gt.txt"), "--enlarge", "1.4"
        )
        assert code == 0
        from rotdet import parse_msra

        boxes = [g.box for g in parse_msra(out)]
        assert boxes[0].h == pytest.approx(14)
        assert boxes[0].w == pytest.approx(70)

    def test_rotate_requires_image_size(self, tmp_path, capsys):
        gts = [GroundTruthInstance(RotatedBox(100, 50, 10, 50, 0))]
        (tmp_path / "gt.txt").write_text(serialize_msra(gts), encoding="utf-8")
        code, _, err = run(
            capsys, "augment", str(tmp_path / "gt.txt"), "--alpha", "30deg"
        )
        assert code == 1 and "image" in err

    def test_rotate_about_center(self, tmp_path, capsys):
        gts = [GroundTruthInstance(RotatedBox(100, 50, 10, 50, 0))]
        (tmp_path / "gt.txt").write_text(serialize_msra(gts), encoding="utf-8")
        code, out, _ = run(
            capsys, "augment", str(tmp_path / "gt.txt"),
            "--alpha", "90deg", "--image-w", "200", "--image-h", "100",
        )
        assert code == 0
        from rotdet import parse_msra

        box = parse_msra(out)[0].box
        # image center (100, 50) is the box center: only theta changes
        assert (box.x, box.y) == pytest.approx((100, 50))
        assert box.theta == pytest.approx(PI / 2)


class TestAnchorsCommand:
    def test_count_and_format(self, capsys):
        code, out, err = run(capsys, "anchors", "--feat-w", "2", "--feat-h", "3")
        assert code == 0
        lines = out.splitlines()
        assert len(lines) == 2 * 3 * 54
        assert "count: 324" in err
        first = [float(v) for v in lines[0].split()]
        assert len(first) == 5

    def test_border_filter_reduces(self, capsys):
        code, full, _ = run(capsys, "anchors", "--feat-w", "4", "--feat-h", "4")
        code2, kept, _ = run(
            capsys, "anchors", "--feat-w", "4", "--feat-h", "4",
            "--image-w", "64", "--image-h", "64", "--padding", "2.0",
        )
        assert code == code2 == 0
        assert 0 < len(kept.splitlines()) < len(full.splitlines())


def make_eval_corpus(tmp_path):
    """Five images: per-image known counts giving aggregate P=8/9, R=8/12."""
    dets_dir = tmp_path / "dets"
    gts_dir = tmp_path / "gts"
    dets_dir.mkdir()
    gts_dir.mkdir()

    def gt_at(k, readable=True):
        return GroundTruthInstance(RotatedBox(200 * k + 50, 50, 20, 80, 0.0), readable)

    def det_for(g, score=0.9):
        return Detection(g.box, score)

    far = RotatedBox(5000, 5000, 20, 80, 0.0)

    # img1: 3 gts, 3 perfect dets                  -> m=3 d=3 g=3
    g1 = [gt_at(k) for k in range(3)]
    # img2: 2 gts, 1 det matching, 1 false positive -> m=1 d=2 g=2
    g2 = [gt_at(k) for k in range(2)]
    d2 = [det_for(g2[0]), Detection(far, 0.8)]
    # img3: 3 gts, 2 dets matching                  -> m=2 d=2 g=3
    g3 = [gt_at(k) for k in range(3)]
    d3 = [det_for(g3[0]), det_for(g3[2])]
    # img4: 2 gts + 1 unreadable; det on unreadable is discounted
    #                                              -> m=2 d=2 g=2
    g4 = [gt_at(0), gt_at(1), gt_at(2, readable=False)]
    d4 = [det_for(g4[0]), det_for(g4[1]), det_for(g4[2])]
    # img5: 2 gts, no det file                      -> m=0 d=0 g=2
    g5 = [gt_at(k) for k in range(2)]

    all_gts = {"img1": g1, "img2": g2, "img3": g3, "img4": g4, "img5": g5}
    all_dets = {"img1": [det_for(g) for g in g1], "img2": d2, "img3": d3,
                "img4": d4}
    for name, gts in all_gts.items():
        (gts_dir / (name + ".txt")).write_text(serialize_msra(gts),
                                               encoding="utf-8")
    for name, dets in all_dets.items():
        write_dets(dets_dir / (name + ".txt"), dets)
    return dets_dir, gts_dir


class TestEvalCommand:
    def test_five_image_corpus(self, tmp_path, capsys):
        dets_dir, gts_dir = make_eval_corpus(tmp_path)
        code, out, _ = run(
            capsys, "eval", str(dets_dir), str(gts_dir), "--format", "msra"
        )
        assert code == 0
        lines = out.splitlines()
        assert len(lines) == 6  # five per-image lines plus the aggregate
        assert lines[0].startswith("img1.txt P=1.0000 R=1.0000 F=1.0000")
        assert lines[1].startswith("img2.txt P=0.5000 R=0.5000")
        assert lines[4].startswith("img5.txt P=0.0000 R=0.0000 F=0.0000")
        p, r, f = 8 / 9, 8 / 12, 2 * (8 / 9) * (8 / 12) / (8 / 9 + 8 / 12)
        assert lines[5] == "P=%.4f R=%.4f F=%.4f" % (p, r, f)

    def test_det_without_gt_errors(self, tmp_path, capsys):
        dets_dir, gts_dir = make_eval_corpus(tmp_path)
        write_dets(dets_dir / "orphan.txt",
                   [Detection(RotatedBox(0, 0, 10, 20, 0), 0.9)])
        code, _, err = run(
            capsys, "eval", str(dets_dir), str(gts_dir), "--format", "msra"
        )
        assert code == 1 and "orphan.txt" in err

    def test_empty_gts_dir_errors(self, tmp_path, capsys):
        (tmp_path / "d").mkdir()
        (tmp_path / "g").mkdir()
        code, _, err = run(
            capsys, "eval", str(tmp_path / "d"), str(tmp_path / "g"),
            "--format", "msra",
        )
        assert code == 1 and "error:" in err

    def test_horizontal_flag_changes_overlap(self, tmp_path, capsys):
        dets_dir = tmp_path / "dets"
        gts_dir = tmp_path / "gts"
        dets_dir.mkdir()
        gts_dir.mkdir()
        # tilted detection vs its own axis-aligned hull as gt: only the
        # horizontal fit clears a 0.9 IoU bar
        from rotdet import to_horizontal

        tilted = RotatedBox(50, 50, 10, 60, PI / 5)
        gt_box = to_horizontal(tilted)
        (gts_dir / "img.txt").write_text(
            serialize_msra([GroundTruthInstance(gt_box)]), encoding="utf-8"
        )
        write_dets(dets_dir / "img.txt", [Detection(tilted, 0.9)])
        code, out, _ = run(
            capsys, "eval", str(dets_dir), str(gts_dir), "--format", "msra",
            "--iou", "0.9",
        )
        assert code == 0 and out.splitlines()[-1] == "P=0.0000 R=0.0000 F=0.0000"
        code, out, _ = run(
            capsys, "eval", str(dets_dir), str(gts_dir), "--format", "msra",
            "--iou", "0.9", "--horizontal",
        )
        assert code == 0 and out.splitlines()[-1] == "P=1.0000 R=1.0000 F=1.0000"
