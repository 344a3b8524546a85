#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "onelap/mesh.hpp"
#include "onelap/sources.hpp"

namespace onelap {

/// Nodal P1 function on a mesh. With `zero_trace` the boundary values are
/// held at exactly zero.
class Field {
public:
    explicit Field(const Mesh& mesh, bool zero_trace = true);
    Field(const Mesh& mesh, Eigen::VectorXd values, bool zero_trace);

    const Mesh& mesh() const { return *mesh_; }
    const Eigen::VectorXd& values() const { return values_; }
    double operator[](int v) const { return values_[v]; }
    bool zero_trace() const { return zero_trace_; }

    /// Replaces the nodal values; boundary entries must be zero for
    /// zero-trace fields.
    void set_values(Eigen::VectorXd values);

    /// Constant gradient of the interpolant on triangle t.
    Vec2 gradient(std::size_t t) const;

    double max_value() const { return values_.maxCoeff(); }
    double min_value() const { return values_.minCoeff(); }
    double linf() const { return values_.cwiseAbs().maxCoeff(); }

private:
    const Mesh* mesh_;
    Eigen::VectorXd values_;
    bool zero_trace_;
};

/// Interior (unconstrained) vertices and the map between nodal vectors and
/// the reduced unknown vector.
class FreeDofs {
public:
    explicit FreeDofs(const Mesh& mesh);

    int size() const { return static_cast<int>(dofs_.size()); }
    const std::vector<int>& vertices() const { return dofs_; }
    /// -1 for constrained vertices.
    int index(int vertex) const { return index_[vertex]; }

    Eigen::VectorXd restrict(const Eigen::VectorXd& nodal) const;
    Eigen::VectorXd extend(const Eigen::VectorXd& reduced) const;

private:
    std::vector<int> dofs_;
    std::vector<int> index_;
    std::size_t num_vertices_;
};

struct EnergyParams {
    double p = 2.0;
    double eps = 0.0;
    Branch branch = Branch::plus;
};

/// (1/p) sum_T |T| (|grad u|^2 + eps^2)^{p/2} - sum_v m_v F_branch(u_v).
double energy_Jp(const Field& u, const EnergyParams& params, const SourceSpec& spec);

/// Plus-branch J_p shifted by ((p-1)/p)|Omega|; nondecreasing in p.
double energy_Ip(const Field& u, const EnergyParams& params, const SourceSpec& spec);

/// Total variation plus trace term minus source potential; u may carry a
/// nonzero trace.
double energy_J1(const Field& u, const SourceSpec& spec);

/// Nodal residual of the regularized p-Laplace equation; constrained rows
/// are zero.
Eigen::VectorXd gradient_Jp(const Field& u, const EnergyParams& params, const SourceSpec& spec);

/// Hessian of energy_Jp restricted to the free dofs.
Eigen::MatrixXd hessian_Jp(const Field& u, const EnergyParams& params, const SourceSpec& spec,
                           const FreeDofs& dofs);

/// P1 stiffness matrix on the free dofs.
Eigen::MatrixXd stiffness_matrix(const Mesh& mesh, const FreeDofs& dofs);

/// Discrete seminorms used by the diagnostics.
double grad_p_integral(const Field& u, double p);   // sum |T| |grad u|^p
double total_variation(const Field& u);             // sum |T| |grad u|
double trace_l1(const Field& u);                    // boundary integral of |u|
/// ||u|| = int |Du| + int_{boundary} |u|
double bv_norm(const Field& u);

void write_field(std::ostream& os, const Field& u);
Field read_field(std::istream& is, const Mesh& mesh, bool zero_trace);

}  // namespace onelap
