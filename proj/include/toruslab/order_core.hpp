#pragma once

#include "toruslab/arith.hpp"
#include "toruslab/field.hpp"

#include <map>
#include <optional>
#include <unordered_map>

namespace toruslab {

struct OrderRep {
    FieldPtr K;
    Lattice lat;
    Int disc;
};

struct FracIdealRep {
    FieldPtr K;
    Lattice lat;

    /// Covolume relative to Z[t]/P.
    Rat norm() const { return lat.covolume(); }
    bool operator==(const FracIdealRep& o) const { return lat == o.lat; }
};

struct IdealClassRep {
    FracIdealRep representative;
    OrderRep order;
    std::size_t id = 0;
};

struct UnitGroupRep {
    int torsion_order = 2;
    /// log|sigma_i(u)| per place, one row per fundamental unit.
    std::vector<std::vector<double>> fundamental_logs;
    double regulator = 1.0;
    std::vector<QVec> fundamental_units;
};

Int index_of(const Lattice& big, const Lattice& small);

OrderRep order_from_poly(const FieldPtr& K);
OrderRep order_from_lattice(const FieldPtr& K, const Lattice& lat);
OrderRep maximal_order(const FieldPtr& K);
/// [O_K : Z[t]]
Int poly_index(const FieldPtr& K);
bool is_order(const FieldPtr& K, const Lattice& lat);

FracIdealRep as_ideal(const OrderRep& o);
FracIdealRep ideal_from_generators(const OrderRep& o, const std::vector<QVec>& gens);
FracIdealRep ideal_scale(const FracIdealRep& a, const QVec& lambda);
FracIdealRep ideal_mul(const FracIdealRep& a, const FracIdealRep& b);
/// (a : b) = {x : x b subset of a}
FracIdealRep ideal_colon(const FracIdealRep& a, const FracIdealRep& b);
OrderRep multiplier_ring(const FracIdealRep& a);
bool is_invertible(const FracIdealRep& a, const OrderRep& o);
bool contains(const FracIdealRep& a, const QVec& x);

/// Local homothety at one prime, by search over (a : b) / p (a : b).
bool is_locally_homothetic_at(const FracIdealRep& a, const FracIdealRep& b, const Int& p);
bool is_locally_homothetic(const FracIdealRep& a, const FracIdealRep& b);

std::vector<std::pair<Int, int>> factor_int(Int x);

/// Integral ideals of o with index at most bound, sorted by (index, HNF).
std::vector<FracIdealRep> ideals_of_bounded_norm(const OrderRep& o, const Int& bound, std::size_t cap = 2'000'000);

// ---------------------------------------------------------------------------
// Homothety classes through reduced lattices (lattices L with 1 a minimum of L).

struct RegistryOptions {
    double region_factor = 2.0;
    double log_step = 0.7;
    std::size_t node_cap = 4'000'000;
};

struct ClassData {
    Lattice canonical;
    Lattice multiplier;
    Int multiplier_disc;
    std::size_t root = 0;
    std::size_t node_count = 0;
    int torsion = 2;
    std::vector<std::vector<double>> unit_logs;
    double regulator = 1.0;
};

class ClassRegistry {
public:
    explicit ClassRegistry(FieldPtr K, RegistryOptions opts = {});

    const FieldPtr& field() const { return K_; }
    /// Class id of the homothety class of L; explores the class on first sight.
    std::size_t classify(const Lattice& L);
    const ClassData& info(std::size_t id) const { return classes_.at(id); }
    std::size_t size() const { return classes_.size(); }
    IdealClassRep class_rep(std::size_t id) const;

    /// Returns lambda with a = lambda * b, if a and b are homothetic.
    std::optional<QVec> homothety(const Lattice& a, const Lattice& b);
    /// Exact fundamental units of the multiplier ring of class id.
    std::vector<QVec> fundamental_units(std::size_t id) const;

    /// A reduced lattice M and v with M = v^-1 L.
    std::pair<Lattice, QVec> reduce(const Lattice& L) const;

    struct NodeView {
        Lattice lat;
        /// log|sigma_i(alpha)| per place, with lat = alpha^-1 times the root lattice of the class.
        std::vector<double> log_pos;
    };
    /// The reduced lattices of class id, root first.
    std::vector<NodeView> class_nodes(std::size_t id) const;

private:
    struct Node {
        Lattice lat;
        std::size_t cls;
        std::size_t parent;
        QVec step;
        std::vector<double> log_pos;
    };
    struct Relation {
        std::size_t a;
        QVec w;
        std::size_t b;
        std::vector<double> log;
    };
    struct Minimum {
        QVec elt;
        std::vector<double> abs;
    };
    std::vector<Minimum> minima_region(const Lattice& M) const;
    std::size_t explore(const Lattice& M);
    QVec alpha(std::size_t node) const;
    QVec relation_unit(const Relation& r) const;

    FieldPtr K_;
    RegistryOptions opts_;
    std::vector<Node> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<ClassData> classes_;
    std::vector<std::vector<Relation>> relations_;
    std::vector<std::vector<std::map<std::size_t, Int>>> unit_words_;
};

Lattice lat_mul_elem(const Field& K, const Lattice& L, const QVec& x);

bool is_homothetic(const FracIdealRep& a, const FracIdealRep& b, QVec* witness = nullptr);
UnitGroupRep unit_group(const OrderRep& o, bool exact_units = true);
int torsion_order(const OrderRep& o);

struct PicardGroup {
    std::vector<IdealClassRep> classes;
    std::vector<std::vector<std::size_t>> table;
    /// characters[k][c] = angle a with psi_k(class c) = exp(2 pi i a).
    std::vector<std::vector<Rat>> characters;
    std::vector<long> relative_orders;
    std::vector<std::vector<long>> exponents;
    std::map<std::size_t, std::size_t> position;  // registry id -> index

    std::size_t order() const { return classes.size(); }
    std::size_t index_of_class(std::size_t registry_id) const { return position.at(registry_id); }
};

double minkowski_constant(int n, int s);
PicardGroup picard_group(const OrderRep& o, ClassRegistry& reg);
PicardGroup picard_group(const OrderRep& o);

std::string to_json(const FracIdealRep& a);
std::string to_json(const OrderRep& o);

}  // namespace toruslab
