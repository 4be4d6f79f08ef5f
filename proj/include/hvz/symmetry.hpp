#pragma once

#include <span>
#include <string>
#include <vector>

#include "hvz/grid.hpp"
#include "hvz/hamiltonians.hpp"

namespace hvz {

enum class GroupKind { permutation, point };

// Spinor factor attached to improper point elements: `literal` uses the
// spin rotation of the proper part only; `parity` multiplies it by beta.
enum class InversionConvention { literal, parity };

struct GroupElement {
    std::string label;
    std::vector<int> perm;            // permutation groups: slot k moves to perm[k]
    Mat3 rotation = Mat3::Identity();  // point groups: orthogonal, entries in {0, +-1}
    Mat4 spinor = Mat4::Identity();
    bool improper = false;
};

struct Irrep {
    std::string label;
    int dim = 1;
    std::vector<CMat> matrices;     // one unitary dim x dim matrix per element
    std::vector<cplx> characters;  // traces, one per element
};

// Finite group with its irreducible unitary representations. Products
// follow operator composition: element(i) * element(j) acts as j first.
class FiniteGroup {
public:
    // Closure of the generators. `generator_images[r]` lists, for irrep r,
    // the matrix of each generator; inconsistent images raise "inconsistent_table".
    static FiniteGroup from_generators(GroupKind kind, std::string name, int particle_count,
                                       const std::vector<GroupElement>& generators,
                                       const std::vector<std::string>& irrep_labels,
                                       const std::vector<std::vector<CMat>>& generator_images);

    // Built-in point double groups: "C1", "C2" (binary rotations about z),
    // "Ci", "C2v" (axis z, mirrors x and y).
    static FiniteGroup point_group(const std::string& name,
                                   InversionConvention convention = InversionConvention::literal);

    // Group generated by transpositions inside each identical-particle
    // group, with irreps as products of the built-in S1/S2/S3 tables.
    // Irrep labels join factor labels with '*'; the trivial group has "triv".
    static FiniteGroup permutation_group(int particle_count, const std::vector<std::vector<int>>& identical);

    // Text table:
    //   group <name> permutation <N> | group <name> point
    //   element <label> perm <image of 0> ... <image of N-1>
    //   element <label> point <ax> <ay> <az> <angle/pi in [0,4)> proper|improper
    //   irrep <label> <dim>
    //   rep <element> <irrep> <dim^2 (re im) pairs, row-major>
    // Every element needs a rep line for every irrep; '#' starts a comment.
    static FiniteGroup load(const std::string& path, InversionConvention convention = InversionConvention::literal);

    const std::string& name() const noexcept { return name_; }
    GroupKind kind() const noexcept { return kind_; }
    int particle_count() const noexcept { return particles_; }
    int order() const noexcept { return static_cast<int>(elements_.size()); }
    const std::vector<GroupElement>& elements() const noexcept { return elements_; }
    const std::vector<Irrep>& irreps() const noexcept { return irreps_; }
    const Irrep& irrep(const std::string& label) const;
    int irrep_index(const std::string& label) const;
    int multiply(int a, int b) const { return table_[a * order() + b]; }
    int identity() const noexcept { return 0; }
    int find_element(const GroupElement& e) const;  // -1 if absent
    std::vector<std::vector<int>> conjugacy_classes() const;

    // Largest deviation from the orthogonality relations and the
    // homomorphism property over all irreps.
    double table_defect() const;

private:
    void finalize();  // multiplication table, characters, validation

    std::string name_;
    GroupKind kind_ = GroupKind::point;
    int particles_ = 0;
    std::vector<GroupElement> elements_;
    std::vector<Irrep> irreps_;
    std::vector<int> table_;
};

// Unitary action of one group element on a field. Point elements act on
// every particle: (O f)(p) = W(p) f(R^-1 p), with W = U in full mode and
// u(p)^dagger U u(R^-1 p) in compressed mode (momentum representation only).
SpinorField apply_element(const FiniteGroup& group, int element, const SpinorField& field,
                          std::span<const double> masses);

// (d / |G|) sum_g conj(chi(g)) O(g) f.
SpinorField project(const FiniteGroup& group, const std::string& irrep, const SpinorField& field,
                    std::span<const double> masses);

// (d / |G|) sum_g conj(D_lk(g)) O(g) f, rows and columns 0-based.
SpinorField row_project(const FiniteGroup& group, const std::string& irrep, int row, int col,
                        const SpinorField& field, std::span<const double> masses);

// Projector as a linear operator on compressed momentum coefficient vectors.
class SymmetryProjector final : public LinearOperator {
public:
    SymmetryProjector(FiniteGroup group, std::string irrep, MomentumGrid grid, std::vector<double> masses);
    std::size_t dim() const override { return grid_.state_dim(); }
    void apply(std::span<const cplx> in, std::span<cplx> out) const override;

private:
    FiniteGroup group_;
    std::string irrep_;
    MomentumGrid grid_;
    std::vector<double> masses_;
};

// Composition A B of two commuting projectors (or any two operators).
class ProductOperator final : public LinearOperator {
public:
    ProductOperator(const LinearOperator& a, const LinearOperator& b);
    std::size_t dim() const override { return a_.dim(); }
    void apply(std::span<const cplx> in, std::span<cplx> out) const override;

private:
    const LinearOperator& a_;
    const LinearOperator& b_;
};

struct BranchPair {
    std::string first;
    std::string second;
    int multiplicity = 0;
};

// Subgroup of Pi generated by transpositions of identical particles inside
// `cluster`, renumbered to 0..|cluster|-1.
FiniteGroup cluster_permutation_group(const std::vector<std::vector<int>>& identical, const std::vector<int>& cluster);

// Pairs (E1, E2) with nonzero multiplicity of E1 x E2 in E restricted to
// Pi_1 x Pi_2 (the relation (E1, E2) < E).
std::vector<BranchPair> permutation_branching(const FiniteGroup& pi, const std::string& irrep,
                                              const std::vector<std::vector<int>>& identical,
                                              const ClusterDecomposition& z);

// Pairs (D1, D2) whose tensor product contains D.
std::vector<BranchPair> point_branching(const FiniteGroup& gamma, const std::string& irrep);

// ||P f|| / ||f|| for a few random fields; > 0 witnesses P != 0.
double witness_nonzero(const LinearOperator& projector, std::uint64_t seed, int samples = 3);

}  // namespace hvz
