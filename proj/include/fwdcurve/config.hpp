#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fwdcurve/projection.hpp"
#include "fwdcurve/solver.hpp"

#include "json.hpp"

namespace fwdcurve {

/// Configuration rejected: unknown key, wrong type, missing section, or
/// malformed JSON (with line/column in the message).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Declarative run description.  Every field has the documented default
/// except the noise eigenpairs and the diffusion family, which must be
/// stated explicitly where a run needs them.  The resolved form (defaults
/// filled in, command-line overrides applied) is echoed next to the outputs
/// and is itself a valid input that reproduces the run.
struct RunConfig {
  // space
  double weight_param = 1.0;
  double x_max = 14.0;
  int n_nodes = 201;

  // noise
  std::vector<EigenPairSpec> eigenpairs;  // may be empty for check-only runs

  // model
  struct DiffusionConfig {
    std::string family;  // cev | cev_tilde | exp_form | separable | custom
    double gamma = 1.0;
    double beta = 1.0;
    double eps = 1e-2;
    double sigma0 = 0.2;
    std::string psi_tilde = "constant";  // exp_form inner map
    std::string phi = "identity";        // separable shape name
    std::string name = "constant";       // custom registry name
    double value = 1.0;                  // custom constant value
  } diffusion;
  struct DriftConfig {
    std::string family = "zero";  // zero | constant | mean_revert | proportional
    double a0 = 0.0;
    double kappa = 1.0;
    double theta = 1.0;
    double mu = 0.0;
  } drift;

  // initial curve
  struct InitialConfig {
    std::string kind = "flat";  // flat | exp
    double level = 1.0;
    double base = 1.0;
    double amplitude = 1.0;
    double rate = 1.0;
  } initial;

  SimConfig sim;

  struct OutputConfig {
    std::string dir = "out";
    bool csv = true;
    bool json = true;
  } outputs;

  struct CompareConfig {
    bool present = false;
    std::vector<double> maturities;
    int dt_halvings = 4;
    int n_paths = 200;
    bool exp_model = false;
    bool absorb_at_zero = true;
  } compare;

  struct GirsanovConfig {
    bool enabled = false;
    double t_bar = 0.0;
  } girsanov;
};

/// Parses raw JSON text; malformed input raises ConfigError with line and
/// column, unknown keys anywhere raise ConfigError naming the key.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const nlohmann::json& j);

/// The full effective configuration, defaults included, key order fixed.
nlohmann::ordered_json resolved_config_json(const RunConfig& cfg);

// Builders: materialize the numerical objects a run needs.
SpaceConfigPtr build_space(const RunConfig& cfg);
CovariancePtr build_noise(const RunConfig& cfg, const SpaceConfigPtr& space);
PointwiseMap build_diffusion(const RunConfig::DiffusionConfig& cfg);
PointwiseMap build_drift(const RunConfig::DriftConfig& cfg);
CoefficientSpecPtr build_coefficients(const RunConfig& cfg);
CurveGrid build_initial_curve(const RunConfig& cfg, const SpaceConfigPtr& space);

}  // namespace fwdcurve
