"""Command-line frontend for batch operations on annotation/detection files."""

import argparse
import math
import sys
from pathlib import Path

from .anchors import AnchorSpec, filter_border, generate_anchors
from .datasets import (
    ParseError,
    enlarge_context,
    match_detections,
    parse_detections,
    prf,
    to_horizontal,
    parse_icdar13,
    parse_icdar15,
    parse_msra,
    serialize_detections,
    serialize_icdar13,
    serialize_icdar15,
    serialize_msra,
)
from .geometry import ImageSize, rotate_ground_truth, skew_iou_matrix
from .linking import LinkConfig, link_text_segments
from .matching import Detection, skew_nms

_GT_PARSERS = {"msra": parse_msra, "icdar13": parse_icdar13, "icdar15": parse_icdar15}
_GT_SERIALIZERS = {
    "msra": serialize_msra,
    "icdar13": serialize_icdar13,
    "icdar15": serialize_icdar15,
}


def parse_angle(text):
    """Angle argument: bare number is radians, a 'deg' suffix means degrees."""
    text = text.strip()
    if text.lower().endswith("deg"):
        return math.radians(float(text[:-3]))
    return float(text)


def _read_boxes(path, fmt):
    contents = Path(path).read_text(encoding="utf-8")
    if fmt == "det":
        return [d.box for d in parse_detections(contents)]
    return [g.box for g in _GT_PARSERS[fmt](contents)]


def _cmd_iou(args):
    try:
        boxes_a = _read_boxes(args.file_a, args.format)
        boxes_b = _read_boxes(args.file_b, args.format)
    except ParseError as exc:
        raise ParseError("%s" % exc)
    matrix = skew_iou_matrix(boxes_a, boxes_b)
    for row in matrix:
        print(" ".join("%.6f" % v for v in row))
    return 0


def _cmd_nms(args):
    dets = parse_detections(Path(args.dets_file).read_text(encoding="utf-8"))
    kept = skew_nms(dets, args.iou_keep, args.iou_low, parse_angle(args.angle_limit))
    sys.stdout.write(serialize_detections(kept))
    return 0


def _cmd_link(args):
    dets = parse_detections(Path(args.dets_file).read_text(encoding="utf-8"))
    merged = link_text_segments(
        [d.box for d in dets], LinkConfig(args.angle_threshold)
    )
    sys.stdout.write(serialize_detections([Detection(b, 1.0) for b in merged]))
    return 0


def _cmd_augment(args):
    parse = _GT_PARSERS[args.format]
    serialize = _GT_SERIALIZERS[args.format]
    gts = parse(Path(args.gt_file).read_text(encoding="utf-8"))
    alpha = parse_angle(args.alpha)
    out = []
    for gt in gts:
        box = gt.box
        if alpha != 0.0:
            if args.image_w is None or args.image_h is None:
                raise ValueError("--image-w/--image-h required when --alpha is nonzero")
            box = rotate_ground_truth(box, alpha, ImageSize(args.image_w, args.image_h))
        if args.enlarge != 1.0:
            box = enlarge_context(box, args.enlarge)
        out.append(
            type(gt)(box, readable=gt.readable, transcription=gt.transcription)
        )
    sys.stdout.write(serialize(out))
    return 0


def _cmd_anchors(args):
    spec = AnchorSpec(stride=args.stride)
    grid = generate_anchors(spec, args.feat_w, args.feat_h)
    if args.image_w is not None and args.image_h is not None:
        kept = filter_border(grid, ImageSize(args.image_w, args.image_h), args.padding)
    else:
        kept = list(enumerate(grid.boxes))
    for _, box in kept:
        print("%.6f %.6f %.6f %.6f %.6f" % (box.x, box.y, box.w, box.h, box.theta))
    print("count: %d" % len(kept), file=sys.stderr)
    return 0


def _cmd_eval(args):
    parse = _GT_PARSERS[args.format]
    gts_dir = Path(args.gts_dir)
    dets_dir = Path(args.dets_dir)
    gt_files = sorted(p for p in gts_dir.iterdir() if p.is_file())
    if not gt_files:
        raise ValueError("no ground-truth files in %s" % gts_dir)
    missing = [p.name for p in sorted(dets_dir.iterdir()) if not (gts_dir / p.name).exists()]
    if missing:
        raise ValueError("missing gt files for: %s" % ", ".join(missing))

    total_matched = 0
    total_dets = 0
    total_readable = 0
    for gt_path in gt_files:
        gts = parse(gt_path.read_text(encoding="utf-8"))
        det_path = dets_dir / gt_path.name
        if det_path.exists():
            dets = parse_detections(det_path.read_text(encoding="utf-8"))
        else:
            dets = []
        if args.horizontal:
            dets = [Detection(to_horizontal(d.box), d.score) for d in dets]
        matches, dont_care = match_detections(dets, gts, args.iou)
        readable = sum(1 for g in gts if g.readable)
        p, r, f = prf(len(matches), len(dets) - dont_care, readable)
        total_matched += len(matches)
        total_dets += len(dets) - dont_care
        total_readable += readable
        print("%s P=%.4f R=%.4f F=%.4f" % (gt_path.name, p, r, f))
    precision, recall, f = prf(total_matched, total_dets, total_readable)
    print("P=%.4f R=%.4f F=%.4f" % (precision, recall, f))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rotdet", description="Rotated text-detection geometry toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("iou", help="pairwise skew IoU matrix of two box files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--format", choices=["det", "msra", "icdar13", "icdar15"],
                   default="det")
    p.set_defaults(func=_cmd_iou)

    p = sub.add_parser("nms", help="skew non-maximum suppression over detections")
    p.add_argument("dets_file")
    p.add_argument("--iou-keep", type=float, default=0.7)
    p.add_argument("--iou-low", type=float, default=0.3)
    p.add_argument("--angle-limit", default="15deg")
    p.set_defaults(func=_cmd_nms)

    p = sub.add_parser("eval", help="precision/recall/F over a detection corpus")
    p.add_argument("dets_dir")
    p.add_argument("gts_dir")
    p.add_argument("--format", choices=["msra", "icdar13", "icdar15"], required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--horizontal", action="store_true",
                   help="fit detections to axis-aligned rectangles first")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("link", help="merge collinear detections into text lines")
    p.add_argument("dets_file")
    p.add_argument("--angle-threshold", type=float, default=10.0)
    p.set_defaults(func=_cmd_link)

    p = sub.add_parser("augment", help="rotate/enlarge ground-truth annotations")
    p.add_argument("gt_file")
    p.add_argument("--format", choices=["msra", "icdar13", "icdar15"], default="msra")
    p.add_argument("--alpha", default="0")
    p.add_argument("--image-w", type=int)
    p.add_argument("--image-h", type=int)
    p.add_argument("--enlarge", type=float, default=1.0)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("anchors", help="dump the rotation-anchor lattice")
    p.add_argument("--feat-w", type=int, required=True)
    p.add_argument("--feat-h", type=int, required=True)
    p.add_argument("--stride", type=float, default=16.0)
    p.add_argument("--image-w", type=int)
    p.add_argument("--image-h", type=int)
    p.add_argument("--padding", type=float, default=0.25)
    p.set_defaults(func=_cmd_anchors)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
