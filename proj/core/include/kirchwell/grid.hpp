#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kw {

using Field = Eigen::VectorXd;
using SparseMat = Eigen::SparseMatrix<double>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define KW_REQUIRE(cond, msg)                                                  \
    do {                                                                       \
        if (!(cond)) throw ::kw::Error(std::string("kirchwell: ") + (msg));    \
    } while (0)

enum class GridMode { tensor, radial };

/// Sampler evaluated at a node coordinate. Tensor grids pass dim entries,
/// radial grids pass the single coordinate r.
using Sampler = std::function<double(const std::vector<double>&)>;

struct GridSpec {
    int dim = 1;                 // tensor: 1..3; radial: ambient dimension N >= 3
    GridMode mode = GridMode::tensor;
    double half_length = 1.0;    // box (-L,L)^dim, or radial domain (0,L)
    int nodes_per_axis = 9;      // odd, >= 9

    double spacing() const {
        return mode == GridMode::tensor ? 2.0 * half_length / (nodes_per_axis - 1)
                                        : half_length / (nodes_per_axis - 1);
    }
};

/**
 * Finite-difference grid over the truncation domain with homogeneous
 * Dirichlet trace on the outer boundary.
 *
 * Fields are vectors over the interior degrees of freedom. The radial mode
 * keeps the origin as a degree of freedom (symmetry condition u'(0) = 0,
 * enforced through the half-cell stiffness coefficient) and excludes only
 * r = L. Quadrature weights are nodal; the full-node weight vector integrates
 * smooth functions over the whole domain, the interior view is what fields
 * see.
 */
class Grid {
  public:
    static Grid build(const GridSpec& spec);

    const GridSpec& spec() const { return spec_; }
    GridMode mode() const { return spec_.mode; }
    int dim() const { return spec_.dim; }
    double spacing() const { return h_; }

    Eigen::Index interior_count() const { return interior_weights_.size(); }
    Eigen::Index total_count() const { return full_weights_.size(); }

    /// Coordinates of interior node i (dim entries; radial: one entry, r).
    const std::vector<double>& node(Eigen::Index i) const { return coords_[static_cast<size_t>(i)]; }

    const Field& weights() const { return interior_weights_; }
    const Field& full_weights() const { return full_weights_; }

    /// Stiffness matrix of the Dirichlet form (interior x interior, SPD).
    const SparseMat& stiffness() const { return stiffness_; }

    /// Sample a function at every interior node.
    Field sample(const Sampler& fn) const;
    /// Sample at every node including the Dirichlet boundary.
    Field sample_full(const Sampler& fn) const;

    /// Nodal -Delta u (conservative radial form; 2nd order central tensor stencil).
    Field laplacian_apply(const Field& u) const;

    /// Quadrature: accepts an interior-sized field (boundary treated as 0)
    /// or a full nodal vector.
    double integrate(const Field& w) const;

    /// Dirichlet inner product  sum grad u . grad v  (exact summation by parts
    /// partner of laplacian_apply).
    double inner_dirichlet(const Field& u, const Field& v) const;

    /// <u,v> with the well form:  inner_dirichlet + mu * int V u v.
    /// V given as interior nodal values.
    double inner_mu(const Field& V, const Field& u, const Field& v, double mu) const;

    double norm_mu(const Field& V, const Field& u, double mu) const {
        return std::sqrt(std::max(0.0, inner_mu(V, u, u, mu)));
    }

    void check_field(const Field& u, const char* where) const {
        KW_REQUIRE(u.size() == interior_count(),
                   std::string(where) + ": field size does not match grid");
    }

    double unit_sphere_area() const { return sphere_area_; }

  private:
    Grid() = default;

    GridSpec spec_;
    double h_ = 0.0;
    double sphere_area_ = 0.0;  // radial mode only
    Field interior_weights_;
    Field full_weights_;
    std::vector<std::vector<double>> coords_;
    SparseMat stiffness_;

    // tensor bookkeeping
    std::array<Eigen::Index, 3> istride_{};  // interior strides
    Eigen::Index inodes_axis_ = 0;
};

}  // namespace kw
