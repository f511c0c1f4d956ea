#include "oitlab/vrc.hpp"

#include "oitlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace oitlab {

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

Eigen::Vector3i voxel_of(const Vec3& p, const VoxelGrid& grid) {
    Vec3 rel = (p - grid.bounds.min()).cwiseQuotient(grid.cell_size());
    Eigen::Vector3i v;
    for (int a = 0; a < 3; ++a)
        v[a] = std::clamp(static_cast<int>(std::floor(rel[a])), 0, grid.res[a] - 1);
    return v;
}

struct Quantizer {
    VoxelGrid* grid;

    // Snap a face-crossing point to the center of its Q x Q face cell. The
    // crossed coordinate already sits exactly on the boundary plane.
    Vec3 snap(const Vec3& x, int axis, const Eigen::Vector3i& voxel, QuantizedEndpoint& meta) {
        Vec3 cell = grid->cell_size();
        Vec3 voxmin = grid->bounds.min() + voxel.cast<float>().cwiseProduct(cell);
        int q = grid->quantization;
        Vec3 snapped = x;
        float disp2 = 0.0f;
        int axes[2] = {(axis + 1) % 3, (axis + 2) % 3};
        uint16_t cells[2];
        for (int k = 0; k < 2; ++k) {
            int a = axes[k];
            float frac = std::clamp((x[a] - voxmin[a]) / cell[a], 0.0f, 1.0f);
            int ci = std::min(q - 1, static_cast<int>(frac * q));
            cells[k] = static_cast<uint16_t>(ci);
            snapped[a] = voxmin[a] + (ci + 0.5f) / q * cell[a];
            disp2 += (snapped[a] - x[a]) * (snapped[a] - x[a]);
        }
        grid->max_quant_displacement =
            std::max(grid->max_quant_displacement, std::sqrt(disp2));
        meta.cell_u = cells[0];
        meta.cell_v = cells[1];
        meta.interior = false;
        return snapped;
    }
};

}  // namespace

VoxelGrid voxelize_lines(const LineSet& ls, const Eigen::Vector3i& res, int quantization,
                         const Eigen::AlignedBox3f& bounds) {
    if ((res.array() < 1).any()) throw std::invalid_argument("voxelize_lines: res must be >= 1");
    if (quantization < 1) throw std::invalid_argument("voxelize_lines: Q must be >= 1");
    if (bounds.isEmpty() || (bounds.diagonal().array() <= 0.0f).any())
        throw std::invalid_argument("voxelize_lines: degenerate bounds");

    VoxelGrid grid;
    grid.res = res;
    grid.bounds = bounds;
    grid.quantization = quantization;
    grid.cells.resize(static_cast<size_t>(res.x()) * res.y() * res.z());
    Vec3 cell = grid.cell_size();
    float face_extent = cell.maxCoeff();
    grid.quant_displacement_bound =
        face_extent * std::sqrt(2.0f) / (2.0f * static_cast<float>(quantization));
    float min_len = 1e-7f * cell.minCoeff();

    Quantizer quant{&grid};

    for (uint32_t li = 0; li < ls.polylines.size(); ++li) {
        const auto& run = ls.polylines[li];
        Vec3 cur_pos = ls.vertices[run[0]].position;
        float cur_attr = ls.vertices[run[0]].attribute;
        QuantizedEndpoint cur_meta;
        cur_meta.interior = true;
        Eigen::Vector3i voxel = voxel_of(cur_pos, grid);
        uint32_t seg_counter = 0;

        auto emit = [&](const Vec3& p1, float a1, const QuantizedEndpoint& q1,
                        const Eigen::Vector3i& vox) {
            if ((p1 - cur_pos).norm() > min_len) {
                grid.cells[grid.cell_index(vox)].push_back(
                    VoxelSegment{cur_pos, p1, cur_attr, a1, li, seg_counter++, cur_meta, q1});
            }
            cur_pos = p1;
            cur_attr = a1;
        };

        for (size_t si = 0; si + 1 < run.size(); ++si) {
            Vec3 p = ls.vertices[run[si]].position;
            Vec3 r = ls.vertices[run[si + 1]].position;
            float ap = ls.vertices[run[si]].attribute;
            float ar = ls.vertices[run[si + 1]].attribute;
            Vec3 d = r - p;

            Eigen::Vector3i step;
            Vec3 t_max, t_delta;
            for (int a = 0; a < 3; ++a) {
                if (d[a] > 0.0f) {
                    step[a] = 1;
                    float boundary = grid.bounds.min()[a] + (voxel[a] + 1) * cell[a];
                    t_max[a] = (boundary - p[a]) / d[a];
                    t_delta[a] = cell[a] / d[a];
                } else if (d[a] < 0.0f) {
                    step[a] = -1;
                    float boundary = grid.bounds.min()[a] + voxel[a] * cell[a];
                    t_max[a] = (boundary - p[a]) / d[a];
                    t_delta[a] = -cell[a] / d[a];
                } else {
                    step[a] = 0;
                    t_max[a] = kInf;
                    t_delta[a] = kInf;
                }
            }

            for (;;) {
                int axis = 0;
                float t_next = t_max[0];
                for (int a = 1; a < 3; ++a)
                    if (t_max[a] < t_next) {
                        t_next = t_max[a];
                        axis = a;
                    }
                if (t_next >= 1.0f) break;

                Vec3 x = p + t_next * d;
                // Pin the crossed coordinate to the exact boundary plane.
                float boundary = grid.bounds.min()[axis] +
                                 (voxel[axis] + (step[axis] > 0 ? 1 : 0)) * cell[axis];
                x[axis] = boundary;

                QuantizedEndpoint meta;
                meta.face = static_cast<uint8_t>(axis * 2 + (step[axis] > 0 ? 1 : 0));
                Vec3 xq = quant.snap(x, axis, voxel, meta);
                emit(xq, ap + t_next * (ar - ap), meta, voxel);

                Eigen::Vector3i next_voxel = voxel;
                next_voxel[axis] += step[axis];
                if (!grid.in_range(next_voxel)) {
                    // Numerical overshoot at the outer boundary; the segment
                    // remainder is a sliver that stays in this voxel.
                    break;
                }
                voxel = next_voxel;
                // Entering through the opposite face, same face cell.
                cur_meta = meta;
                cur_meta.face = static_cast<uint8_t>(axis * 2 + (step[axis] > 0 ? 0 : 1));
                t_max[axis] += t_delta[axis];
            }

            QuantizedEndpoint end_meta;
            end_meta.interior = true;
            emit(r, ar, end_meta, voxel);
            cur_meta = end_meta;
        }
    }

    for (auto& list : grid.cells)
        std::sort(list.begin(), list.end(), [](const VoxelSegment& a, const VoxelSegment& b) {
            return std::make_pair(a.line_id, a.seg_id) < std::make_pair(b.line_id, b.seg_id);
        });
    return grid;
}

VoxelGrid voxelize_lines(const LineSet& ls, const Eigen::Vector3i& res, int quantization,
                         float pad) {
    Eigen::AlignedBox3f box = ls.bounds();
    Vec3 margin = Vec3::Constant(pad).cwiseMax(box.diagonal() * pad);
    box.min() -= margin;
    box.max() += margin;
    return voxelize_lines(ls, res, quantization, box);
}

DdaWalker::DdaWalker(const Ray& ray, const VoxelGrid& grid) {
    res_ = grid.res;
    Vec3 cell = grid.cell_size();
    float t0 = 0.0f, t1 = kInf;
    for (int a = 0; a < 3; ++a) {
        if (ray.dir[a] != 0.0f) {
            float ta = (grid.bounds.min()[a] - ray.origin[a]) / ray.dir[a];
            float tb = (grid.bounds.max()[a] - ray.origin[a]) / ray.dir[a];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        } else if (ray.origin[a] < grid.bounds.min()[a] || ray.origin[a] > grid.bounds.max()[a]) {
            return;  // parallel and outside the slab
        }
    }
    if (t0 > t1) return;

    Vec3 entry = ray.origin + t0 * ray.dir;
    for (int a = 0; a < 3; ++a) {
        float rel = (entry[a] - grid.bounds.min()[a]) / cell[a];
        voxel_[a] = std::clamp(static_cast<int>(std::floor(rel)), 0, res_[a] - 1);
        if (ray.dir[a] > 0.0f) {
            step_[a] = 1;
            float boundary = grid.bounds.min()[a] + (voxel_[a] + 1) * cell[a];
            t_max_[a] = (boundary - ray.origin[a]) / ray.dir[a];
            t_delta_[a] = cell[a] / ray.dir[a];
        } else if (ray.dir[a] < 0.0f) {
            step_[a] = -1;
            float boundary = grid.bounds.min()[a] + voxel_[a] * cell[a];
            t_max_[a] = (boundary - ray.origin[a]) / ray.dir[a];
            t_delta_[a] = -cell[a] / ray.dir[a];
        } else {
            step_[a] = 0;
            t_max_[a] = kInf;
            t_delta_[a] = kInf;
        }
    }
    t_cur_ = t0;
    t_end_ = t1;
    active_ = true;
}

bool DdaWalker::next(VoxelStep& out) {
    if (!active_) return false;
    int axis = 0;
    float t_next = t_max_[0];
    for (int a = 1; a < 3; ++a)
        if (t_max_[a] < t_next) {
            t_next = t_max_[a];
            axis = a;
        }

    out.voxel = voxel_;
    out.t_entry = t_cur_;
    if (t_next >= t_end_) {
        out.t_exit = t_end_;
        active_ = false;
        return true;
    }
    out.t_exit = t_next;
    t_cur_ = t_next;
    voxel_[axis] += step_[axis];
    t_max_[axis] += t_delta_[axis];
    if (voxel_[axis] < 0 || voxel_[axis] >= res_[axis]) active_ = false;
    return true;
}

std::vector<VoxelStep> dda_traverse(const Ray& ray, const VoxelGrid& grid) {
    std::vector<VoxelStep> steps;
    DdaWalker walker(ray, grid);
    VoxelStep s;
    while (walker.next(s)) steps.push_back(s);
    return steps;
}

int intersect_ray_tube(const Ray& ray, const Vec3& p0, const Vec3& p1, float radius, float a0,
                       float a1, TubeHit out[2]) {
    Vec3 axis = p1 - p0;
    float len = axis.norm();
    if (len <= 0.0f || radius <= 0.0f) return 0;
    Vec3 u = axis / len;

    Vec3 m = ray.origin - p0;
    Vec3 d_perp = ray.dir - ray.dir.dot(u) * u;
    Vec3 m_perp = m - m.dot(u) * u;
    float a = d_perp.squaredNorm();
    if (a < 1e-12f) return 0;  // parallel to the axis
    float b = 2.0f * m_perp.dot(d_perp);
    float c = m_perp.squaredNorm() - radius * radius;
    float disc = b * b - 4.0f * a * c;
    if (disc < 0.0f) return 0;
    float sq = std::sqrt(disc);

    int n = 0;
    for (float t : {(-b - sq) / (2.0f * a), (-b + sq) / (2.0f * a)}) {
        if (t <= 1e-6f) continue;
        Vec3 x = ray.origin + t * ray.dir;
        float s = (x - p0).dot(u);
        if (s < 0.0f || s > len) continue;  // clipped by the end planes
        TubeHit h;
        h.t = t;
        h.normal = (x - (p0 + s * u)) / radius;
        h.attribute = a0 + (s / len) * (a1 - a0);
        out[n++] = h;
    }
    return n;
}

namespace {

constexpr char kGridMagic[8] = {'O', 'I', 'T', 'V', 'G', 'R', 'I', 'D'};
constexpr uint32_t kGridVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_endpoint(std::ostream& out, const QuantizedEndpoint& q) {
    write_pod(out, q.face);
    write_pod(out, q.cell_u);
    write_pod(out, q.cell_v);
    uint8_t interior = q.interior ? 1 : 0;
    write_pod(out, interior);
}

void read_endpoint(std::istream& in, QuantizedEndpoint& q) {
    read_pod(in, q.face);
    read_pod(in, q.cell_u);
    read_pod(in, q.cell_v);
    uint8_t interior = 0;
    read_pod(in, interior);
    q.interior = interior != 0;
}

}  // namespace

void save_voxel_grid(const VoxelGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_voxel_grid: cannot open " + path);
    out.write(kGridMagic, sizeof(kGridMagic));
    write_pod(out, kGridVersion);
    for (int a = 0; a < 3; ++a) write_pod(out, grid.res[a]);
    for (int a = 0; a < 3; ++a) write_pod(out, grid.bounds.min()[a]);
    for (int a = 0; a < 3; ++a) write_pod(out, grid.bounds.max()[a]);
    write_pod(out, grid.quantization);
    write_pod(out, grid.max_quant_displacement);
    write_pod(out, grid.quant_displacement_bound);
    for (const auto& cell : grid.cells) {
        write_pod(out, static_cast<uint64_t>(cell.size()));
        for (const VoxelSegment& seg : cell) {
            for (int a = 0; a < 3; ++a) write_pod(out, seg.p0[a]);
            for (int a = 0; a < 3; ++a) write_pod(out, seg.p1[a]);
            write_pod(out, seg.a0);
            write_pod(out, seg.a1);
            write_pod(out, seg.line_id);
            write_pod(out, seg.seg_id);
            write_endpoint(out, seg.q0);
            write_endpoint(out, seg.q1);
        }
    }
    if (!out) throw std::runtime_error("save_voxel_grid: write failed for " + path);
}

VoxelGrid load_voxel_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_voxel_grid: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_voxel_grid: not a voxel grid file: " + path);
    uint32_t version = 0;
    read_pod(in, version);
    if (version != kGridVersion)
        throw std::runtime_error("load_voxel_grid: unsupported version in " + path);

    VoxelGrid grid;
    for (int a = 0; a < 3; ++a) read_pod(in, grid.res[a]);
    Vec3 lo, hi;
    for (int a = 0; a < 3; ++a) read_pod(in, lo[a]);
    for (int a = 0; a < 3; ++a) read_pod(in, hi[a]);
    grid.bounds = Eigen::AlignedBox3f(lo, hi);
    read_pod(in, grid.quantization);
    read_pod(in, grid.max_quant_displacement);
    read_pod(in, grid.quant_displacement_bound);
    if (!in || (grid.res.array() < 1).any())
        throw std::runtime_error("load_voxel_grid: bad header in " + path);

    grid.cells.resize(static_cast<size_t>(grid.res.x()) * grid.res.y() * grid.res.z());
    for (auto& cell : grid.cells) {
        uint64_t count = 0;
        read_pod(in, count);
        if (!in) throw std::runtime_error("load_voxel_grid: truncated file " + path);
        cell.resize(count);
        for (VoxelSegment& seg : cell) {
            for (int a = 0; a < 3; ++a) read_pod(in, seg.p0[a]);
            for (int a = 0; a < 3; ++a) read_pod(in, seg.p1[a]);
            read_pod(in, seg.a0);
            read_pod(in, seg.a1);
            read_pod(in, seg.line_id);
            read_pod(in, seg.seg_id);
            read_endpoint(in, seg.q0);
            read_endpoint(in, seg.q1);
        }
    }
    if (!in) throw std::runtime_error("load_voxel_grid: truncated file " + path);
    return grid;
}

Framebuffer vrc_render(const VoxelGrid& grid, float radius, const Camera& camera,
                       const TransferFunction& tf, const Vec3& background, VrcStats* stats,
                       const ShadingParams& shading) {
    camera.validate();
    Framebuffer out(camera.width, camera.height, background);
    std::vector<VrcStats> row_stats(camera.height);

    static const Eigen::Vector3i kNeighborOffsets[6] = {
        {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};

    struct LocalHit {
        TubeHit hit;
        uint32_t line_id, seg_id;
    };

    parallel_for(camera.height, [&](int y) {
        size_t blended = 0, tests = 0;
        std::vector<LocalHit> hits;
        for (int x = 0; x < camera.width; ++x) {
            Ray ray = camera.pixel_ray(x, y);
            Vec3 color = Vec3::Zero();
            float transmittance = 1.0f;

            DdaWalker walker(ray, grid);
            VoxelStep step;
            while (transmittance >= 1e-3f && walker.next(step)) {
                hits.clear();
                auto test_cell = [&](const Eigen::Vector3i& v) {
                    if (!grid.in_range(v)) return;
                    for (const VoxelSegment& seg : grid.cells[grid.cell_index(v)]) {
                        ++tests;
                        TubeHit th[2];
                        int n = intersect_ray_tube(ray, seg.p0, seg.p1, radius, seg.a0, seg.a1, th);
                        for (int i = 0; i < n; ++i) {
                            // Interval ownership: this voxel blends only hits
                            // inside its own parameter range.
                            if (th[i].t >= step.t_entry && th[i].t < step.t_exit)
                                hits.push_back({th[i], seg.line_id, seg.seg_id});
                        }
                    }
                };
                test_cell(step.voxel);
                for (const auto& off : kNeighborOffsets) test_cell(step.voxel + off);

                std::sort(hits.begin(), hits.end(), [](const LocalHit& a, const LocalHit& b) {
                    return std::tie(a.hit.t, a.line_id, a.seg_id) <
                           std::tie(b.hit.t, b.line_id, b.seg_id);
                });
                for (const LocalHit& lh : hits) {
                    Vec4 base = apply_transfer(tf, std::clamp(lh.hit.attribute, 0.0f, 1.0f));
                    Vec4 shaded = shade_fragment(base, lh.hit.normal, -ray.dir, shading);
                    color += transmittance * shaded.w() * shaded.head<3>();
                    transmittance *= 1.0f - shaded.w();
                    ++blended;
                    if (transmittance < 1e-3f) break;
                }
            }
            color += transmittance * background;
            out.color.at(x, y) = color;
            out.alpha[static_cast<size_t>(y) * camera.width + x] = 1.0f - transmittance;
        }
        row_stats[y] = {blended, tests};
    });
    if (stats) {
        for (const VrcStats& r : row_stats) {
            stats->blended_hits += r.blended_hits;
            stats->tube_tests += r.tube_tests;
        }
    }
    return out;
}

}  // namespace oitlab
