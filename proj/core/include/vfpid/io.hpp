#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vfpid/ar.hpp"
#include "vfpid/basis.hpp"
#include "vfpid/selection.hpp"
#include "vfpid/signal.hpp"
#include "vfpid/simulate.hpp"
#include "vfpid/spectral.hpp"
#include "vfpid/types.hpp"
#include "vfpid/vfp.hpp"

namespace vfpid {

/// Stamped into every emitted file (CSV comment line / JSON field).
struct Provenance {
  std::string tool = "vfpid";
  std::string version;
  std::string config_hash;

  std::string comment_line() const;  // "# vfpid <version> config=<hash>"
};

/// Doubles are written with 17 significant digits everywhere so that
/// identical runs produce byte-identical outputs.
std::string format_double(double value);

/// Optional renaming of the pool CSV columns; defaults match the canonical
/// header `k1,k2,fs,t,y`. Column order in the file is free.
struct PoolCsvSchema {
  std::string k1 = "k1";
  std::string k2 = "k2";
  std::string fs = "fs";
  std::string t = "t";
  std::string y = "y";
};

/// Reads a pool CSV: rows grouped by (k1,k2), strictly monotone 0-based t
/// within each group. Lines starting with '#' are ignored. Throws io_error
/// on parse failures, inconsistent lengths or rates, and duplicate states.
SignalPool load_pool_csv(const std::filesystem::path& path, const PoolCsvSchema& schema = {});

void save_pool_csv(const SignalPool& pool, const std::filesystem::path& path,
                   const Provenance* provenance = nullptr);

void save_energy_csv(const EnergyStats& stats, const std::filesystem::path& path,
                     const Provenance* provenance = nullptr);

void save_psd_csv(const PsdEstimate& psd, const std::filesystem::path& path,
                  const Provenance* provenance = nullptr);

void save_stabilization_csv(const std::vector<StabilizationEntry>& diagram,
                            const std::filesystem::path& path,
                            const Provenance* provenance = nullptr);

void save_selection_csv(const SelectionReport& report, const std::filesystem::path& path,
                        const Provenance* provenance = nullptr);
void save_selection_summary_json(const SelectionReport& report,
                                 const std::filesystem::path& path,
                                 const Provenance* provenance = nullptr);

std::string basis_to_json(const BasisSpec& spec);
BasisSpec basis_from_json(const std::string& text);

/// Model JSON document; p_theta moves to a little-endian float64 sidecar
/// (`<stem>.p_theta.f64`) when n*p > 500.
void save_model_json(const VfpArModel& model, const std::filesystem::path& path,
                     const Provenance* provenance = nullptr);
VfpArModel load_model_json(const std::filesystem::path& path);

void save_simspec_json(const SimSpec& spec, const std::filesystem::path& path,
                       const Provenance* provenance = nullptr);
SimSpec load_simspec_json(const std::filesystem::path& path);

/// Surface CSV (header row = frequency axis, first column = swept values),
/// metadata JSON sidecar (`<stem>.meta.json`) and, when any row is
/// extrapolated, a 0/1 mask CSV (`<stem>.mask.csv`) of the same shape.
void save_frf_surface(const FrfSurface& surface, const std::filesystem::path& csv_path,
                      const Provenance* provenance = nullptr);

void save_frozen_csv(const FrozenModel& frozen, double ci_level,
                     const std::filesystem::path& path,
                     const Provenance* provenance = nullptr);

void save_validation_csv(const ValidationReport& report, const std::filesystem::path& path,
                         const Provenance* provenance = nullptr);

}  // namespace vfpid
