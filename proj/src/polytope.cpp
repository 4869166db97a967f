#include "lqmpc/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "lqmpc/errors.hpp"
#include "lqmpc/riccati.hpp"

namespace lqmpc {

HPolytope::HPolytope(Matrix H, Vector h) : H_(std::move(H)), h_(std::move(h)) {
    if (H_.rows() != h_.size()) {
        throw InvalidArgument("HPolytope: H has " + std::to_string(H_.rows()) + " rows but h has " +
                              std::to_string(h_.size()) + " entries");
    }
    if (H_.cols() == 0) throw InvalidArgument("HPolytope: zero-dimensional");
    if (!H_.allFinite() || !h_.allFinite()) throw InvalidArgument("HPolytope: non-finite entry");
    for (Eigen::Index i = 0; i < H_.rows(); ++i) {
        if (H_.row(i).norm() == 0.0) throw InvalidArgument("HPolytope: row " + std::to_string(i) + " has zero normal");
    }
}

HPolytope HPolytope::box(const Vector& lower, const Vector& upper) {
    if (lower.size() != upper.size()) throw InvalidArgument("HPolytope::box: bound sizes differ");
    const Eigen::Index n = lower.size();
    std::vector<std::pair<Vector, double>> rows;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isfinite(upper(i))) {
            Vector r = Vector::Zero(n);
            r(i) = 1.0;
            rows.emplace_back(r, upper(i));
        }
        if (std::isfinite(lower(i))) {
            Vector r = Vector::Zero(n);
            r(i) = -1.0;
            rows.emplace_back(r, -lower(i));
        }
    }
    Matrix H(static_cast<Eigen::Index>(rows.size()), n);
    Vector h(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        H.row(static_cast<Eigen::Index>(k)) = rows[k].first.transpose();
        h(static_cast<Eigen::Index>(k)) = rows[k].second;
    }
    return HPolytope(std::move(H), std::move(h));
}

HPolytope HPolytope::symmetric_box(const Vector& radius) { return box(-radius, radius); }

bool HPolytope::contains(const Vector& x, double tol) const {
    if (x.size() != dim()) {
        throw InvalidArgument("HPolytope::contains: point has dimension " + std::to_string(x.size()) +
                              ", polytope has " + std::to_string(dim()));
    }
    const Vector s = H_ * x - h_;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol * std::max(1.0, std::abs(h_(i)))) return false;
    return true;
}

bool HPolytope::contains(const Vector& x) const { return contains(x, feas_tol); }

bool HPolytope::origin_interior() const { return rows() == 0 || h_.minCoeff() > 0.0; }

HPolytope HPolytope::intersect(const HPolytope& other) const {
    if (other.dim() != dim()) throw InvalidArgument("HPolytope::intersect: dimension mismatch");
    Matrix H(rows() + other.rows(), dim());
    H << H_, other.H_;
    Vector h(rows() + other.rows());
    h << h_, other.h_;
    return HPolytope(std::move(H), std::move(h));
}

HPolytope HPolytope::preimage(const Matrix& m) const {
    if (m.rows() != dim()) throw InvalidArgument("HPolytope::preimage: dimension mismatch");
    return HPolytope(H_ * m, h_);
}

LpResult lp_solve(const Vector& c, const HPolytope& p) {
    if (c.size() != p.dim()) throw InvalidArgument("lp_solve: objective dimension mismatch");
    LinearProgram lp;
    lp.c = -c;
    lp.A_ub = p.H();
    lp.b_ub = p.h();
    lp.A_eq = Matrix(0, c.size());
    lp.b_eq = Vector(0);
    LpResult r = solve_lp(lp);
    if (r.status == LpStatus::optimal) r.value = c.dot(r.x);
    return r;
}

namespace {

// max a'x over rows of H restricted by `keep`, with the candidate row itself
// relaxed by one unit so the LP stays bounded in its direction.
bool row_is_redundant(const Matrix& H, const Vector& h, const std::vector<bool>& keep, Eigen::Index i) {
    Eigen::Index count = 0;
    for (Eigen::Index r = 0; r < H.rows(); ++r)
        if (keep[static_cast<std::size_t>(r)] || r == i) ++count;
    Matrix A(count, H.cols());
    Vector b(count);
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < H.rows(); ++r) {
        if (r == i) {
            A.row(k) = H.row(r);
            b(k++) = h(r) + 1.0;
        } else if (keep[static_cast<std::size_t>(r)]) {
            A.row(k) = H.row(r);
            b(k++) = h(r);
        }
    }
    const LpResult res = lp_solve(H.row(i).transpose(), HPolytope(std::move(A), std::move(b)));
    return res.status == LpStatus::optimal && res.value <= h(i) + lp_tol * std::max(1.0, std::abs(h(i)));
}

}  // namespace

HPolytope remove_redundant(const HPolytope& p) {
    const Eigen::Index m = p.rows();
    // Normalize so duplicate rows compare equal.
    Matrix H = p.H();
    Vector h = p.h();
    for (Eigen::Index i = 0; i < m; ++i) {
        const double nrm = H.row(i).norm();
        H.row(i) /= nrm;
        h(i) /= nrm;
    }
    std::vector<bool> keep(static_cast<std::size_t>(m), true);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            if (keep[static_cast<std::size_t>(j)] && (H.row(i) - H.row(j)).norm() < 1e-12) {
                // Same normal: keep the tighter offset.
                if (h(i) < h(j)) {
                    keep[static_cast<std::size_t>(j)] = false;
                } else {
                    keep[static_cast<std::size_t>(i)] = false;
                }
                break;
            }
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!keep[static_cast<std::size_t>(i)]) continue;
        keep[static_cast<std::size_t>(i)] = false;
        if (!row_is_redundant(H, h, keep, i)) keep[static_cast<std::size_t>(i)] = true;
    }
    Eigen::Index count = 0;
    for (bool k : keep) count += k ? 1 : 0;
    Matrix Ho(count, p.dim());
    Vector ho(count);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!keep[static_cast<std::size_t>(i)]) continue;
        Ho.row(k) = H.row(i);
        ho(k++) = h(i);
    }
    return HPolytope(std::move(Ho), std::move(ho));
}

bool is_bounded(const HPolytope& p) {
    for (Eigen::Index j = 0; j < p.dim(); ++j) {
        for (double s : {1.0, -1.0}) {
            Vector c = Vector::Zero(p.dim());
            c(j) = s;
            if (lp_solve(c, p).status != LpStatus::optimal) return false;
        }
    }
    return true;
}

std::optional<ChebyshevBall> chebyshev_ball(const HPolytope& p) {
    const Eigen::Index n = p.dim();
    Matrix A(p.rows() + 1, n + 1);
    Vector b(p.rows() + 1);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        A.row(i).head(n) = p.H().row(i);
        A(i, n) = p.H().row(i).norm();
        b(i) = p.h()(i);
    }
    A.row(p.rows()).setZero();
    A(p.rows(), n) = 1.0;  // cap the radius so unbounded sets still solve
    b(p.rows()) = 1e6;
    Vector c = Vector::Zero(n + 1);
    c(n) = 1.0;
    const LpResult r = lp_solve(c, HPolytope(std::move(A), std::move(b)));
    if (r.status != LpStatus::optimal) return std::nullopt;
    return ChebyshevBall{r.x.head(n), r.x(n)};
}

InvariantSetResult maximal_invariant_set_detailed(const Matrix& closed_loop, const HPolytope& xhat,
                                                  const HPolytope& u, const Matrix& gain) {
    require_square_finite(closed_loop, "maximal_invariant_set");
    if (xhat.dim() != closed_loop.rows() || gain.cols() != closed_loop.rows() || u.dim() != gain.rows()) {
        throw InvalidArgument("maximal_invariant_set: dimension mismatch");
    }
    const double sr = spectral_radius(closed_loop);
    if (sr >= 1.0 - tol::stability) {
        throw DomainError("maximal_invariant_set: closed loop is not stable (spectral radius " +
                          std::to_string(sr) + ")");
    }
    // Y = {x | Hx x <= hx, Hu L x <= hu}
    const HPolytope y = xhat.intersect(u.preimage(gain));
    Matrix H = y.H();
    Vector h = y.h();

    constexpr int cap = 500;
    Matrix power = Matrix::Identity(closed_loop.rows(), closed_loop.cols());
    for (int k = 1; k <= cap; ++k) {
        power = closed_loop * power;
        const Matrix cand = y.H() * power;
        const HPolytope current(H, h);
        std::vector<Eigen::Index> added;
        for (Eigen::Index i = 0; i < cand.rows(); ++i) {
            if (cand.row(i).norm() < 1e-300) continue;  // D^k has hit zero
            const LpResult r = lp_solve(cand.row(i).transpose(), current);
            const bool redundant = r.status == LpStatus::optimal &&
                                   r.value <= y.h()(i) + lp_tol * std::max(1.0, std::abs(y.h()(i)));
            if (!redundant) added.push_back(i);
        }
        if (added.empty()) return InvariantSetResult{remove_redundant(current), k};
        const Eigen::Index old = H.rows();
        H.conservativeResize(old + static_cast<Eigen::Index>(added.size()), Eigen::NoChange);
        h.conservativeResize(old + static_cast<Eigen::Index>(added.size()));
        for (std::size_t j = 0; j < added.size(); ++j) {
            H.row(old + static_cast<Eigen::Index>(j)) = cand.row(added[j]);
            h(old + static_cast<Eigen::Index>(j)) = y.h()(added[j]);
        }
    }
    throw NumericError("maximal_invariant_set: not finitely determined within the iteration cap", cap, sr);
}

HPolytope maximal_invariant_set(const Matrix& closed_loop, const HPolytope& xhat, const HPolytope& u,
                                const GainPolicy& l) {
    return maximal_invariant_set_detailed(closed_loop, xhat, u, l.L()).set;
}

std::vector<Eigen::Vector2d> vertices_2d(const HPolytope& p) {
    if (p.dim() != 2) throw InvalidArgument("vertices_2d: polytope is not 2-dimensional");
    std::vector<Eigen::Vector2d> pts;
    const Matrix& H = p.H();
    const Vector& h = p.h();
    double scale = 1.0;
    for (Eigen::Index i = 0; i < h.size(); ++i) scale = std::max(scale, std::abs(h(i)) / H.row(i).norm());
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < H.rows(); ++j) {
            Eigen::Matrix2d m;
            m << H(i, 0), H(i, 1), H(j, 0), H(j, 1);
            const double det = m.determinant();
            if (std::abs(det) < 1e-12 * H.row(i).norm() * H.row(j).norm()) continue;
            const Eigen::Vector2d v = m.inverse() * Eigen::Vector2d(h(i), h(j));
            if (!p.contains(v, 1e-9)) continue;
            bool dup = false;
            for (const auto& q : pts) {
                if ((q - v).norm() <= 1e-9 * scale) {
                    dup = true;
                    break;
                }
            }
            if (!dup) pts.push_back(v);
        }
    }
    if (pts.size() < 3) return {};
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& q : pts) c += q;
    c /= static_cast<double>(pts.size());
    std::sort(pts.begin(), pts.end(), [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return std::atan2(a.y() - c.y(), a.x() - c.x()) < std::atan2(b.y() - c.y(), b.x() - c.x());
    });
    if (polygon_area(pts) <= 1e-14 * scale * scale) return {};
    return pts;
}

double polygon_area(const std::vector<Eigen::Vector2d>& v) {
    double twice = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& a = v[i];
        const auto& b = v[(i + 1) % v.size()];
        twice += a.x() * b.y() - b.x() * a.y();
    }
    return std::abs(twice) / 2.0;
}

namespace {

std::pair<Vector, Vector> bounding_box(const HPolytope& p) {
    Vector lo(p.dim()), hi(p.dim());
    for (Eigen::Index j = 0; j < p.dim(); ++j) {
        Vector c = Vector::Zero(p.dim());
        c(j) = 1.0;
        const LpResult up = lp_solve(c, p);
        c(j) = -1.0;
        const LpResult dn = lp_solve(c, p);
        if (up.status == LpStatus::infeasible || dn.status == LpStatus::infeasible) {
            lo.setZero();
            hi.setZero();
            return {lo, hi};
        }
        if (up.status != LpStatus::optimal || dn.status != LpStatus::optimal) {
            throw DomainError("volume: polytope is unbounded along coordinate " + std::to_string(j));
        }
        hi(j) = up.value;
        lo(j) = -dn.value;
    }
    return {lo, hi};
}

}  // namespace

VolumeEstimate monte_carlo_volume(const HPolytope& p, std::uint64_t seed, long samples) {
    if (samples <= 0) throw InvalidArgument("monte_carlo_volume: sample count must be positive");
    const auto [lo, hi] = bounding_box(p);
    const double box_vol = (hi - lo).prod();
    if (box_vol <= 0.0) return VolumeEstimate{0.0, 0.0, false};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    long inside = 0;
    Vector x(p.dim());
    for (long s = 0; s < samples; ++s) {
        for (Eigen::Index j = 0; j < p.dim(); ++j) x(j) = lo(j) + (hi(j) - lo(j)) * unit(rng);
        if (p.contains(x, 0.0)) ++inside;
    }
    const double frac = static_cast<double>(inside) / static_cast<double>(samples);
    return VolumeEstimate{box_vol * frac, box_vol * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples)),
                          false};
}

VolumeEstimate volume(const HPolytope& p, std::uint64_t seed, long samples) {
    if (p.dim() == 2) {
        if (!is_bounded(p)) {
            // An empty set is bounded; is_bounded reports infeasible LPs as unbounded.
            if (!chebyshev_ball(p)) return VolumeEstimate{0.0, 0.0, true};
            throw DomainError("volume: polytope is unbounded");
        }
        return VolumeEstimate{polygon_area(vertices_2d(p)), 0.0, true};
    }
    return monte_carlo_volume(p, seed, samples);
}

std::vector<Vector> hit_and_run(const HPolytope& p, std::size_t count, std::uint64_t seed, std::size_t thin) {
    const auto ball = chebyshev_ball(p);
    if (!ball || ball->radius <= 0.0) throw DomainError("hit_and_run: polytope has empty interior");
    if (ball->radius >= 1e6) throw DomainError("hit_and_run: polytope is unbounded");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector x = ball->center;
    const Eigen::Index n = p.dim();
    std::vector<Vector> out;
    out.reserve(count);
    const std::size_t burn = 50;
    for (std::size_t step = 0; out.size() < count; ++step) {
        Vector d(n);
        for (Eigen::Index j = 0; j < n; ++j) d(j) = gauss(rng);
        d.normalize();
        const Vector hd = p.H() * d;
        const Vector slack = p.h() - p.H() * x;
        double tmin = -std::numeric_limits<double>::infinity();
        double tmax = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < hd.size(); ++i) {
            if (hd(i) > 1e-14) tmax = std::min(tmax, slack(i) / hd(i));
            else if (hd(i) < -1e-14) tmin = std::max(tmin, slack(i) / hd(i));
        }
        if (!std::isfinite(tmin) || !std::isfinite(tmax)) throw DomainError("hit_and_run: polytope is unbounded");
        x += (tmin + (tmax - tmin) * unit(rng)) * d;
        if (step >= burn && (step - burn) % std::max<std::size_t>(thin, 1) == 0) out.push_back(x);
    }
    return out;
}

void write_csv(std::ostream& os, const HPolytope& p) {
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.dim(); ++j) os << p.H()(i, j) << ',';
        os << p.h()(i) << '\n';
    }
}

HPolytope read_csv(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InvalidArgument("read_csv: line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (vals.size() < 2) throw InvalidArgument("read_csv: line " + std::to_string(lineno) + ": too few columns");
        if (!rows.empty() && vals.size() != rows.front().size()) {
            throw InvalidArgument("read_csv: line " + std::to_string(lineno) + ": column count differs");
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw InvalidArgument("read_csv: no rows");
    const auto n = static_cast<Eigen::Index>(rows.front().size() - 1);
    Matrix H(static_cast<Eigen::Index>(rows.size()), n);
    Vector h(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Eigen::Index j = 0; j < n; ++j) H(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
        h(static_cast<Eigen::Index>(i)) = rows[i].back();
    }
    return HPolytope(std::move(H), std::move(h));
}

}  // namespace lqmpc
