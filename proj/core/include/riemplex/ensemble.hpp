#pragma once

#include "riemplex/calculus.hpp"

#include <map>
#include <optional>
#include <vector>

namespace riemplex {

/// Overlay of several tree partitions: every nonempty intersection of one
/// cell per tree, with the per-tree source cell recorded for each piece.
struct ensemble_partition_t {
    std::vector<partition_t> trees;
    partition_t refined;
    // refined cell id -> source cell id in tree b, one entry per tree
    std::map<index_t, std::vector<index_t>> provenance;
};

ensemble_partition_t refine_ensemble(const std::vector<partition_t>& trees,
                                     double tol = 1e-9);

/// Co-occurrence of a set of refined cells: the fraction of trees in which
/// their source cells share a closure point (pairs: adjacency; triples and
/// beyond: the simplex condition; cells sharing a source count as together).
/// With eta in (0,1), tree b carries weight eta^b.
double cooccurrence(const ensemble_partition_t& ens,
                    const std::vector<index_t>& refined_cells,
                    std::optional<double> eta = std::nullopt);

/// Tree frequency of a refined cell: the fraction of trees owning a cell
/// that contains it. Always 1 on refined cells by construction; the hook
/// exists for queries on coarser regions.
double ensemble_freq(const ensemble_partition_t& ens, index_t refined_cell);

/// Mean face volume per dimension, the default ensemble weights.
std::vector<double> default_ensemble_lambdas(const nerve_t& nerve,
                                             const riemannian_structure_t& rs);

/// Riemannian structure on the refined nerve with the co-occurrence terms
/// added: vertex + lambda_0 Freq, edges + lambda_1 sqrt(K K), higher levels
/// + lambda_p det(K-Gram). Empty lambdas selects the mean-face-volume
/// default.
riemannian_structure_t ensemble_metric(const ensemble_partition_t& ens, int max_dim,
                                       std::vector<double> lambdas = {},
                                       std::optional<double> eta = std::nullopt);

// ================================================================
// Sequential (boosting) evolution
// ================================================================

struct boosting_deltas_t {
    struct pair_delta_t {
        index_t u = 0;
        index_t v = 0;
        index_t parent_u = 0; // pre-step refined cells the pair descends from
        index_t parent_v = 0;
        double delta_geom = 0.0;
        double delta_ens = 0.0;
        double k_after = 0.0;
    };
    std::vector<pair_delta_t> pairs;
};

class boosting_state_t {
  public:
    /// Start a run from the first tree; lambda_1 is frozen at the mean
    /// facet volume of this baseline unless overridden.
    static boosting_state_t start(partition_t first_tree,
                                  std::optional<double> lambda1 = std::nullopt,
                                  int max_dim = 3);

    /// Fold in the next tree: refines the partition, updates co-occurrence
    /// incrementally, appends the energy and spectrum series, and reports
    /// the per-descendant-pair changes.
    boosting_deltas_t step(partition_t next_tree);

    int iteration() const { return m_; }
    const ensemble_partition_t& ensemble() const { return ens_; }
    double lambda1() const { return lambda1_; }

    /// K^{(m)} for a refined pair; 1 on the diagonal by the shared-source
    /// convention.
    double k_value(index_t u, index_t v) const;

    const std::vector<double>& energy_series() const { return energy_; }
    const std::vector<spectrum_snapshot_t>& spectrum_series() const { return spectra_; }
    spectral_signature_t signature(std::size_t at) const;
    double geometric_health() const;

    /// -sum of current co-occurrence over refined pairs the candidate tree
    /// actively separates (its sources adjacent and distinct).
    double regularized_tree_penalty(const partition_t& candidate) const;

  private:
    void append_diagnostics();

    int m_ = 0;
    int max_dim_ = 3;
    double lambda1_ = 1.0;
    ensemble_partition_t ens_;
    std::map<std::pair<index_t, index_t>, double> k_;
    std::vector<double> energy_;
    std::vector<spectrum_snapshot_t> spectra_;
};

// ================================================================
// Fixture trainer
// ================================================================

/// Small CART-style regression trainer: axis-aligned variance-reduction
/// splits, constant leaves, depth cap. Exists to generate test partitions
/// and fixtures, nothing more.
partition_t train_cart(const dataset_t& data, const domain_t& domain, int max_depth,
                       index_t min_leaf = 5);

} // namespace riemplex
