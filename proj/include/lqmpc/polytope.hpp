#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "lqmpc/lp.hpp"
#include "lqmpc/matcore.hpp"

namespace lqmpc {

class GainPolicy;

inline constexpr double feas_tol = 1e-9;

/// {x | Hx <= h}. Rows with a zero normal are rejected.
class HPolytope {
public:
    HPolytope() = default;
    HPolytope(Matrix H, Vector h);

    /// {x | lower <= x <= upper}; infinite bounds drop the face.
    static HPolytope box(const Vector& lower, const Vector& upper);
    /// {x | |x_i| <= radius_i}; an infinite radius leaves x_i unconstrained.
    static HPolytope symmetric_box(const Vector& radius);

    Eigen::Index dim() const noexcept { return H_.cols(); }
    Eigen::Index rows() const noexcept { return H_.rows(); }
    const Matrix& H() const noexcept { return H_; }
    const Vector& h() const noexcept { return h_; }

    /// Hx <= h + feas_tol * max(1, |h_i|) componentwise.
    bool contains(const Vector& x) const;
    bool contains(const Vector& x, double tol) const;

    /// Every h_i > 0, i.e. the origin is an interior point.
    bool origin_interior() const;

    HPolytope intersect(const HPolytope& other) const;

    /// {x | M x in this}, i.e. rows H M.
    HPolytope preimage(const Matrix& m) const;

private:
    Matrix H_;
    Vector h_;
};

/// Maximize c'x over P.
LpResult lp_solve(const Vector& c, const HPolytope& p);

/// Drops every row implied by the others (LP test, tolerance lp_tol).
HPolytope remove_redundant(const HPolytope& p);

/// Bounded iff max and min of every coordinate are finite.
bool is_bounded(const HPolytope& p);

/// Largest inscribed ball. radius <= 0 means empty interior.
struct ChebyshevBall {
    Vector center;
    double radius = 0.0;
};
std::optional<ChebyshevBall> chebyshev_ball(const HPolytope& p);

struct InvariantSetResult {
    HPolytope set;
    int determinedness_index = 0;  // first k at which all new rows were redundant
};

/// Maximal positively invariant set of x+ = closed_loop x subject to
/// x in Xhat and Lx in U. Gilbert-Tan recursion: stage k adds the rows of
/// Y (closed_loop)^k; stop when every new row is redundant. Iteration cap 500.
InvariantSetResult maximal_invariant_set_detailed(const Matrix& closed_loop, const HPolytope& xhat,
                                                  const HPolytope& u, const Matrix& gain);
HPolytope maximal_invariant_set(const Matrix& closed_loop, const HPolytope& xhat, const HPolytope& u,
                                const GainPolicy& l);

/// Counter-clockwise vertices of a bounded 2-D polytope; empty when the
/// interior is empty.
std::vector<Eigen::Vector2d> vertices_2d(const HPolytope& p);

/// Shoelace area of a simple polygon given in order.
double polygon_area(const std::vector<Eigen::Vector2d>& vertices);

struct VolumeEstimate {
    double value = 0.0;
    double standard_error = 0.0;  // zero for exact results
    bool exact = false;
};

/// Exact area in 2-D; Monte Carlo over the bounding box for dim >= 3.
VolumeEstimate volume(const HPolytope& p, std::uint64_t seed = 20240601, long samples = 1000000);

/// Monte Carlo volume in any dimension.
VolumeEstimate monte_carlo_volume(const HPolytope& p, std::uint64_t seed, long samples);

/// Hit-and-run samples from the interior of a bounded polytope.
std::vector<Vector> hit_and_run(const HPolytope& p, std::size_t count, std::uint64_t seed, std::size_t thin = 10);

/// One half-space per line: H entries, then h.
void write_csv(std::ostream& os, const HPolytope& p);
HPolytope read_csv(std::istream& is);

}  // namespace lqmpc
