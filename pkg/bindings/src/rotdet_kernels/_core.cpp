// Native kernels mirroring the rotdet reference implementation.
//
// Every numeric routine reproduces the reference arithmetic operation for
// operation (same operand order, same libm calls, no FP contraction), so
// results are bit-identical to the pure-Python package.

#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace py = pybind11;

namespace {

const double PI_ = 3.141592653589793238462643383279502884;  // rounds to the double pi
const double QUARTER_PI = PI_ / 4.0;
const double THETA_HI = 3.0 * PI_ / 4.0;
const double PARALLEL_EPS = 1e-9;
const double INSIDE_EPS = 1e-9;
const double DEDUP_EPS_SQ = 1e-16;

double normalize_angle(double theta) {
    if (!std::isfinite(theta)) {
        throw py::value_error("angle must be finite");
    }
    double r = std::fmod(theta + QUARTER_PI, PI_);
    if (r < 0.0) {
        r += PI_;
    }
    double out = r - QUARTER_PI;
    if (out >= THETA_HI) {  // guard against rounding at the seam
        out -= PI_;
    }
    return out;
}

double angle_sub(double a, double b) { return normalize_angle(a - b); }

struct Box {
    double x, y, h, w, theta;
};

Box make_box(double x, double y, double h, double w, double theta) {
    if (!(std::isfinite(x) && std::isfinite(y) && std::isfinite(h) &&
          std::isfinite(w) && std::isfinite(theta))) {
        throw py::value_error("box fields must be finite");
    }
    if (h <= 0.0 || w <= 0.0) {
        throw py::value_error("box dims must be positive");
    }
    return Box{x, y, h, w, normalize_angle(theta)};
}

Box canonicalize(const Box& b) {
    double x = b.x, y = b.y, h = b.h, w = b.w, theta = b.theta;
    if (w < h) {
        std::swap(h, w);
        theta = normalize_angle(theta + PI_ / 2.0);
    }
    return make_box(x, y, h, w, theta);
}

bool tuple_less(const Box& a, const Box& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    if (a.h != b.h) return a.h < b.h;
    if (a.w != b.w) return a.w < b.w;
    return a.theta < b.theta;
}

struct Pt {
    double x, y;
};

std::array<Pt, 4> box_vertices(const Box& box) {
    double c = std::cos(box.theta);
    double s = std::sin(box.theta);
    double hw = 0.5 * box.w;
    double hh = 0.5 * box.h;
    const double corners[4][2] = {{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}};
    std::array<Pt, 4> out{};
    for (int i = 0; i < 4; ++i) {
        double dx = corners[i][0];
        double dy = corners[i][1];
        out[i] = Pt{box.x + dx * c - dy * s, box.y + dx * s + dy * c};
    }
    return out;
}

void segment_intersection(const Pt& p1, const Pt& q1, const Pt& p2,
                          const Pt& q2, std::vector<Pt>& out) {
    double d1x = q1.x - p1.x;
    double d1y = q1.y - p1.y;
    double d2x = q2.x - p2.x;
    double d2y = q2.y - p2.y;
    double denom = d1x * d2y - d1y * d2x;
    if (std::fabs(denom) <= PARALLEL_EPS) {
        return;
    }
    double ex = p2.x - p1.x;
    double ey = p2.y - p1.y;
    double t = (ex * d2y - ey * d2x) / denom;
    double u = (ex * d1y - ey * d1x) / denom;
    if (-1e-9 <= t && t <= 1.0 + 1e-9 && -1e-9 <= u && u <= 1.0 + 1e-9) {
        out.push_back(Pt{p1.x + t * d1x, p1.y + t * d1y});
    }
}

bool point_in_convex(const Pt& p, const std::array<Pt, 4>& verts) {
    for (int i = 0; i < 4; ++i) {
        const Pt& a = verts[i];
        const Pt& b = verts[(i + 1) % 4];
        double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if (cross < -INSIDE_EPS) {
            return false;
        }
    }
    return true;
}

std::vector<Pt> intersection_polygon(const Box& a, const Box& b) {
    std::array<Pt, 4> va = box_vertices(a);
    std::array<Pt, 4> vb = box_vertices(b);
    std::vector<Pt> pset;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            segment_intersection(va[i], va[(i + 1) % 4], vb[j], vb[(j + 1) % 4],
                                 pset);
        }
    }
    for (const Pt& p : va) {
        if (point_in_convex(p, vb)) pset.push_back(p);
    }
    for (const Pt& p : vb) {
        if (point_in_convex(p, va)) pset.push_back(p);
    }

    std::vector<Pt> kept;
    for (const Pt& p : pset) {
        bool dup = false;
        for (const Pt& q : kept) {
            double dx = p.x - q.x;
            double dy = p.y - q.y;
            if (dx * dx + dy * dy < DEDUP_EPS_SQ) {
                dup = true;
                break;
            }
        }
        if (!dup) kept.push_back(p);
    }

    if (kept.size() >= 3) {
        double sx = 0.0, sy = 0.0;
        for (const Pt& p : kept) sx += p.x;
        for (const Pt& p : kept) sy += p.y;
        double cx = sx / static_cast<double>(kept.size());
        double cy = sy / static_cast<double>(kept.size());
        struct Keyed {
            double ang, d2;
            Pt p;
        };
        std::vector<Keyed> keyed;
        keyed.reserve(kept.size());
        for (const Pt& p : kept) {
            double ang = std::atan2(p.y - cy, p.x - cx);
            double d2 = std::pow(p.x - cx, 2.0) + std::pow(p.y - cy, 2.0);
            keyed.push_back(Keyed{ang, d2, p});
        }
        std::stable_sort(keyed.begin(), keyed.end(),
                         [](const Keyed& l, const Keyed& r) {
                             if (l.ang != r.ang) return l.ang < r.ang;
                             return l.d2 < r.d2;
                         });
        for (size_t i = 0; i < kept.size(); ++i) kept[i] = keyed[i].p;
    }
    return kept;
}

double polygon_area(const std::vector<Pt>& verts) {
    if (verts.size() < 3) return 0.0;
    double x0 = verts[0].x;
    double y0 = verts[0].y;
    double total = 0.0;
    for (size_t i = 1; i + 1 < verts.size(); ++i) {
        double ax = verts[i].x - x0;
        double ay = verts[i].y - y0;
        double bx = verts[i + 1].x - x0;
        double by = verts[i + 1].y - y0;
        total += 0.5 * std::fabs(ax * by - ay * bx);
    }
    return total;
}

struct Aabb {
    double x0, y0, x1, y1;
};

Aabb aabb(const Box& box) {
    std::array<Pt, 4> verts = box_vertices(box);
    double x0 = verts[0].x, x1 = verts[0].x;
    double y0 = verts[0].y, y1 = verts[0].y;
    for (int i = 1; i < 4; ++i) {
        x0 = std::min(x0, verts[i].x);
        x1 = std::max(x1, verts[i].x);
        y0 = std::min(y0, verts[i].y);
        y1 = std::max(y1, verts[i].y);
    }
    return Aabb{x0, y0, x1, y1};
}

double skew_iou(Box a, Box b) {
    // canonical argument order makes the kernel exactly symmetric
    if (tuple_less(b, a)) {
        std::swap(a, b);
    }
    Aabb ra = aabb(a);
    Aabb rb = aabb(b);
    if (ra.x1 < rb.x0 || rb.x1 < ra.x0 || ra.y1 < rb.y0 || rb.y1 < ra.y0) {
        return 0.0;
    }
    double inter = polygon_area(intersection_polygon(a, b));
    double uni = a.w * a.h + b.w * b.h - inter;
    double iou = inter / uni;
    if (iou < 0.0) return 0.0;
    if (iou > 1.0) return 1.0;
    return iou;
}

// ---------------------------------------------------------------------------
// boundary helpers

using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::string shape_str(const Arr& a) {
    std::ostringstream out;
    out << "(";
    for (py::ssize_t i = 0; i < a.ndim(); ++i) {
        if (i) out << ", ";
        out << a.shape(i);
    }
    out << ")";
    return out.str();
}

std::vector<Box> parse_boxes(const Arr& arr, const char* name) {
    if (arr.ndim() != 2 || arr.shape(1) != 5) {
        throw py::value_error(std::string(name) +
                              " must have shape (N, 5) with columns "
                              "(x, y, h, w, theta); got shape " +
                              shape_str(arr));
    }
    auto view = arr.unchecked<2>();
    std::vector<Box> out;
    out.reserve(static_cast<size_t>(arr.shape(0)));
    for (py::ssize_t i = 0; i < arr.shape(0); ++i) {
        out.push_back(make_box(view(i, 0), view(i, 1), view(i, 2), view(i, 3),
                               view(i, 4)));
    }
    return out;
}

Box parse_box1(const Arr& arr, const char* name) {
    if (arr.ndim() != 1 || arr.shape(0) != 5) {
        throw py::value_error(std::string(name) +
                              " must have shape (5,) = (x, y, h, w, theta); "
                              "got shape " + shape_str(arr));
    }
    auto v = arr.unchecked<1>();
    return make_box(v(0), v(1), v(2), v(3), v(4));
}

// ---------------------------------------------------------------------------
// bound operations

double bound_skew_iou(const Arr& a, const Arr& b) {
    Box ba = parse_box1(a, "a");
    Box bb = parse_box1(b, "b");
    return skew_iou(ba, bb);
}

py::array_t<double> bound_skew_iou_matrix(const Arr& a, const Arr& b) {
    std::vector<Box> boxes_a = parse_boxes(a, "a");
    std::vector<Box> boxes_b = parse_boxes(b, "b");
    size_t n = boxes_a.size();
    size_t m = boxes_b.size();
    py::array_t<double> out({n, m});
    double* data = out.mutable_data();
    {
        py::gil_scoped_release release;
        size_t hw = std::thread::hardware_concurrency();
        size_t n_threads = std::max<size_t>(1, std::min(hw ? hw : 1, n));
        auto worker = [&](size_t lo, size_t hi) {
            for (size_t i = lo; i < hi; ++i) {
                for (size_t j = 0; j < m; ++j) {
                    data[i * m + j] = skew_iou(boxes_a[i], boxes_b[j]);
                }
            }
        };
        if (n_threads == 1) {
            worker(0, n);
        } else {
            std::vector<std::thread> threads;
            size_t chunk = (n + n_threads - 1) / n_threads;
            for (size_t t = 0; t < n_threads; ++t) {
                size_t lo = t * chunk;
                size_t hi = std::min(n, lo + chunk);
                if (lo >= hi) break;
                threads.emplace_back(worker, lo, hi);
            }
            for (auto& th : threads) th.join();
        }
    }
    return out;
}

py::array_t<std::int64_t> bound_skew_nms(const Arr& boxes_arr,
                                         const Arr& scores_arr,
                                         double iou_keep, double iou_low,
                                         double angle_limit) {
    std::vector<Box> boxes = parse_boxes(boxes_arr, "boxes");
    if (scores_arr.ndim() != 1 ||
        scores_arr.shape(0) != static_cast<py::ssize_t>(boxes.size())) {
        throw py::value_error(
            "scores must have shape (N,) matching boxes; got shape " +
            shape_str(scores_arr));
    }
    if (iou_low >= iou_keep) {
        throw py::value_error("iou_low must be < iou_keep");
    }
    auto sv = scores_arr.unchecked<1>();
    std::vector<double> scores(boxes.size());
    for (size_t i = 0; i < boxes.size(); ++i) {
        double s = sv(static_cast<py::ssize_t>(i));
        if (!(std::isfinite(s) && 0.0 <= s && s <= 1.0)) {
            throw py::value_error("score must be finite and in [0, 1]");
        }
        scores[i] = s;
    }

    std::vector<std::int64_t> kept;
    {
        py::gil_scoped_release release;
        std::vector<size_t> order(boxes.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t l, size_t r) {
            if (scores[l] != scores[r]) return scores[l] > scores[r];
            return l < r;
        });
        for (size_t i : order) {
            bool suppressed = false;
            for (std::int64_t k : kept) {
                double iou = skew_iou(boxes[i], boxes[static_cast<size_t>(k)]);
                if (iou > iou_keep) {
                    suppressed = true;
                    break;
                }
                if (iou_low <= iou && iou <= iou_keep &&
                    std::fabs(angle_sub(boxes[i].theta,
                                        boxes[static_cast<size_t>(k)].theta)) <
                        angle_limit) {
                    suppressed = true;
                    break;
                }
            }
            if (!suppressed) kept.push_back(static_cast<std::int64_t>(i));
        }
    }
    py::array_t<std::int64_t> out(static_cast<py::ssize_t>(kept.size()));
    std::copy(kept.begin(), kept.end(), out.mutable_data());
    return out;
}

py::array_t<double> boxes_to_array(const std::vector<Box>& boxes) {
    py::array_t<double> out({boxes.size(), static_cast<size_t>(5)});
    double* data = out.mutable_data();
    for (size_t i = 0; i < boxes.size(); ++i) {
        data[i * 5 + 0] = boxes[i].x;
        data[i * 5 + 1] = boxes[i].y;
        data[i * 5 + 2] = boxes[i].h;
        data[i * 5 + 3] = boxes[i].w;
        data[i * 5 + 4] = boxes[i].theta;
    }
    return out;
}

py::array_t<double> bound_generate_anchors(int feat_w, int feat_h,
                                           double stride,
                                           const std::vector<double>& scales,
                                           const std::vector<double>& ratios,
                                           const std::vector<double>& orientations) {
    if (feat_w < 1 || feat_h < 1) {
        throw py::value_error("feature map extent must be >= 1");
    }
    if (scales.empty() || ratios.empty() || orientations.empty()) {
        throw py::value_error(
            "scales, aspect_ratios and orientations must be non-empty");
    }
    if (stride <= 0.0) {
        throw py::value_error("stride must be positive");
    }
    for (double s : scales) {
        if (s <= 0.0) throw py::value_error("scales and ratios must be positive");
    }
    for (double r : ratios) {
        if (r <= 0.0) throw py::value_error("scales and ratios must be positive");
    }
    for (double o : orientations) {
        if (!(-PI_ / 4.0 <= o && o < 3.0 * PI_ / 4.0)) {
            throw py::value_error("orientation outside [-pi/4, 3*pi/4)");
        }
    }
    std::vector<Box> boxes;
    boxes.reserve(static_cast<size_t>(feat_w) * feat_h * orientations.size() *
                  ratios.size() * scales.size());
    {
        py::gil_scoped_release release;
        for (int row = 0; row < feat_h; ++row) {
            double cy = (static_cast<double>(row) + 0.5) * stride;
            for (int col = 0; col < feat_w; ++col) {
                double cx = (static_cast<double>(col) + 0.5) * stride;
                for (double theta : orientations) {
                    for (double ratio : ratios) {
                        double root = std::sqrt(ratio);
                        for (double scale : scales) {
                            double base = scale * stride;
                            boxes.push_back(make_box(cx, cy, base / root,
                                                     base * root, theta));
                        }
                    }
                }
            }
        }
    }
    return boxes_to_array(boxes);
}

py::array_t<double> bound_encode(const Arr& gt_arr, const Arr& anchor_arr) {
    std::vector<Box> gts = parse_boxes(gt_arr, "gt");
    std::vector<Box> anchors = parse_boxes(anchor_arr, "anchors");
    if (gts.size() != anchors.size()) {
        throw py::value_error("gt and anchors must have the same length");
    }
    py::array_t<double> out({gts.size(), static_cast<size_t>(5)});
    double* data = out.mutable_data();
    for (size_t i = 0; i < gts.size(); ++i) {
        const Box& g = gts[i];
        const Box& a = anchors[i];
        data[i * 5 + 0] = (g.x - a.x) / a.w;
        data[i * 5 + 1] = (g.y - a.y) / a.h;
        data[i * 5 + 2] = std::log(g.h / a.h);
        data[i * 5 + 3] = std::log(g.w / a.w);
        data[i * 5 + 4] = angle_sub(g.theta, a.theta);
    }
    return out;
}

py::array_t<double> bound_decode(const Arr& anchor_arr, const Arr& target_arr) {
    std::vector<Box> anchors = parse_boxes(anchor_arr, "anchors");
    if (target_arr.ndim() != 2 || target_arr.shape(1) != 5) {
        throw py::value_error(
            "targets must have shape (N, 5) with columns "
            "(v_x, v_y, v_h, v_w, v_theta); got shape " +
            shape_str(target_arr));
    }
    if (target_arr.shape(0) != static_cast<py::ssize_t>(anchors.size())) {
        throw py::value_error("anchors and targets must have the same length");
    }
    auto tv = target_arr.unchecked<2>();
    std::vector<Box> out_boxes;
    out_boxes.reserve(anchors.size());
    for (size_t i = 0; i < anchors.size(); ++i) {
        py::ssize_t si = static_cast<py::ssize_t>(i);
        double v_x = tv(si, 0), v_y = tv(si, 1), v_h = tv(si, 2);
        double v_w = tv(si, 3), v_theta = tv(si, 4);
        for (double v : {v_x, v_y, v_h, v_w, v_theta}) {
            if (!std::isfinite(v)) {
                throw py::value_error("regression target must be finite");
            }
        }
        const Box& a = anchors[i];
        double h = a.h * std::exp(v_h);
        double w = a.w * std::exp(v_w);
        if (!(std::isfinite(h) && std::isfinite(w))) {
            throw py::value_error("regression target overflows box dimensions");
        }
        out_boxes.push_back(canonicalize(
            make_box(v_x * a.w + a.x, v_y * a.h + a.y, h, w,
                     normalize_angle(v_theta + a.theta))));
    }
    return boxes_to_array(out_boxes);
}

py::array_t<double> bound_rroi_pool(const Arr& fm_arr, const Arr& proposals_arr,
                                    int pooled_h, int pooled_w,
                                    double spatial_scale) {
    if (fm_arr.ndim() != 3) {
        throw py::value_error("feature map must have shape (C, H, W); got shape " +
                              shape_str(fm_arr));
    }
    if (pooled_h < 1 || pooled_w < 1) {
        throw py::value_error("pooled extent must be >= 1");
    }
    if (spatial_scale <= 0.0) {
        throw py::value_error("spatial_scale must be positive");
    }
    auto fv = fm_arr.unchecked<3>();
    py::ssize_t c = fm_arr.shape(0);
    py::ssize_t height = fm_arr.shape(1);
    py::ssize_t width = fm_arr.shape(2);
    for (py::ssize_t ch = 0; ch < c; ++ch) {
        for (py::ssize_t yy = 0; yy < height; ++yy) {
            for (py::ssize_t xx = 0; xx < width; ++xx) {
                if (!std::isfinite(fv(ch, yy, xx))) {
                    throw py::value_error("feature map values must be finite");
                }
            }
        }
    }
    std::vector<Box> proposals = parse_boxes(proposals_arr, "proposals");

    size_t n = proposals.size();
    py::array_t<double> out({n, static_cast<size_t>(c),
                             static_cast<size_t>(pooled_h),
                             static_cast<size_t>(pooled_w)});
    double* data = out.mutable_data();
    const double ss = spatial_scale;
    {
        py::gil_scoped_release release;
        for (size_t p = 0; p < n; ++p) {
            const Box& prop = proposals[p];
            double grid_w = prop.w / static_cast<double>(pooled_w);
            double grid_h = prop.h / static_cast<double>(pooled_h);
            double ct = std::cos(prop.theta);
            double st = std::sin(prop.theta);
            double x = prop.x, y = prop.y;
            long long nk = std::max(
                static_cast<long long>(std::floor(grid_h * ss)), 1LL);
            long long nl = std::max(
                static_cast<long long>(std::floor(grid_w * ss)), 1LL);
            for (int i = 0; i < pooled_h; ++i) {
                for (int j = 0; j < pooled_w; ++j) {
                    double left = x - prop.w / 2.0 + j * grid_w;
                    double top = y - prop.h / 2.0 + i * grid_h;
                    double l_rot = (left - x) * ct + (top - y) * st + x;
                    double t_rot = (top - y) * ct - (left - x) * st + y;
                    for (py::ssize_t ch = 0; ch < c; ++ch) {
                        bool have = false;
                        double best = 0.0;
                        for (long long k = 0; k < nk; ++k) {
                            for (long long l = 0; l < nl; ++l) {
                                double lk = static_cast<double>(l);
                                double kk = static_cast<double>(k);
                                long long px = static_cast<long long>(
                                    std::floor(l_rot * ss + lk * ct + kk * st + 0.5));
                                long long py_ = static_cast<long long>(
                                    std::floor(t_rot * ss - lk * st + kk * ct + 0.5));
                                px = std::min(std::max(px, 0LL),
                                              static_cast<long long>(width - 1));
                                py_ = std::min(std::max(py_, 0LL),
                                               static_cast<long long>(height - 1));
                                double v = fv(ch, static_cast<py::ssize_t>(py_),
                                              static_cast<py::ssize_t>(px));
                                if (!have || v > best) {
                                    best = v;
                                    have = true;
                                }
                            }
                        }
                        data[((p * c + ch) * pooled_h + i) * pooled_w + j] = best;
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native kernels for rotated-box geometry, bit-identical to the "
              "rotdet reference implementation";

    m.def("skew_iou", &bound_skew_iou, py::arg("a"), py::arg("b"),
          "Skew IoU of two (x, y, h, w, theta) boxes.");
    m.def("skew_iou_matrix", &bound_skew_iou_matrix, py::arg("a"), py::arg("b"),
          "Pairwise skew IoU of two (N, 5) box arrays -> (N, M) matrix.");
    m.def("skew_nms", &bound_skew_nms, py::arg("boxes"), py::arg("scores"),
          py::arg("iou_keep") = 0.7, py::arg("iou_low") = 0.3,
          py::arg("angle_limit") = PI_ / 12.0,
          "Greedy skew NMS; returns kept indices in keep order.");
    m.def("generate_anchors", &bound_generate_anchors, py::arg("feat_w"),
          py::arg("feat_h"), py::arg("stride") = 16.0,
          py::arg("scales") = std::vector<double>{8.0, 16.0, 32.0},
          py::arg("ratios") = std::vector<double>{2.0, 5.0, 8.0},
          py::arg("orientations") =
              std::vector<double>{-PI_ / 6.0, 0.0, PI_ / 6.0, PI_ / 3.0,
                                  PI_ / 2.0, 2.0 * PI_ / 3.0},
          "Dense rotation-anchor lattice -> (N, 5) box array.");
    m.def("encode", &bound_encode, py::arg("gt"), py::arg("anchors"),
          "Row-wise regression targets of gt boxes relative to anchors.");
    m.def("decode", &bound_decode, py::arg("anchors"), py::arg("targets"),
          "Row-wise inverse of encode; output boxes are canonical (w >= h).");
    m.def("rroi_pool", &bound_rroi_pool, py::arg("feature_map"),
          py::arg("proposals"), py::arg("pooled_h"), py::arg("pooled_w"),
          py::arg("spatial_scale"),
          "Rotated RoI max pooling -> (N, C, pooled_h, pooled_w).");
}
