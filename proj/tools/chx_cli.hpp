#pragma once

// Subcommands of the chx command-line tool. Kept in a header so the tests can
// drive them in-process.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chx/chx.hpp"

namespace chx::cli {

using json = nlohmann::json;

struct CommandConfig {
  std::string command;
  std::string kind;
  std::string in;
  std::string out;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int d = 2;
  std::string basis = "gellmann";
  double l2 = 0.5;
  double l3 = 0.5;
  double theta = 0.0;
  std::optional<double> eps;
  double delta = 1e-5;
  double a = 0.1;
  double b = 0.1;
  int dm = 2;
  int da = 2;
  int db = 2;
  std::string spec;
  double eta = 0.0;
  int samples = 200;
  bool memory = false;
};

struct CommandResult {
  std::string output;   // file or stdout payload
  std::string summary;  // one human-readable line for stderr
};

inline json read_json_file(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::parse_error, "--in is required");
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::parse_error, "cannot open '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("invalid JSON in '") + path + "': " + e.what());
  }
}

inline void require_positive_tol(double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::degenerate_parameter, "--tol must be positive");
}

/// The default forgetful specification: every J_l is the maximal Jordan
/// block of size dM^2 - 1, v = 0.
inline ForgetfulSpec maximal_tail_spec(int dm, int da, int db) {
  if (dm < 2 || da < 2 || db < 2) throw Error(ErrorCode::invalid_dimension, "dimensions must be >= 2");
  ForgetfulSpec s{dm, da, db, {}, RealVector::Zero(dm * dm - 1), 0.0};
  const int t = dm * dm - 1;
  Matrix jordan = Matrix::Zero(t, t);
  for (int i = 0; i + 1 < t; ++i) jordan(i, i + 1) = 1.0;
  s.j.assign(static_cast<std::size_t>(da * da), jordan);
  return s;
}

inline CommandResult cmd_construct(const CommandConfig& c) {
  require_positive_tol(c.tol);
  json out, prov;
  prov["kind"] = c.kind;
  std::ostringstream summary;
  if (c.kind == "qubit-root") {
    QubitRootSpec spec;
    spec.lambda2 = c.l2;
    spec.lambda3 = c.l3;
    spec.theta = c.theta;
    const auto bloch = qubit_root_bloch(spec);
    out = io::channel_to_json(qubit_maximal_root(spec));
    prov["parameters"] = {{"l2", c.l2}, {"l3", c.l3}, {"theta", c.theta}};
    prov["phi"] = bloch.phi;
    summary << "qubit-root: lambda2=" << c.l2 << " lambda3=" << c.l3 << " theta=" << c.theta << " phi=" << bloch.phi;
  } else if (c.kind == "perturb-root") {
    const auto root = perturb_root(c.d, gellmann_basis(c.d), c.eps);
    out = io::channel_to_json(root.channel);
    prov["parameters"] = {{"d", c.d}, {"eps", c.eps ? json(*c.eps) : json("auto")}};
    prov["epsilon"] = root.spec.epsilon;
    prov["certified_interval"] = {root.spec.certified_interval.lo, root.spec.certified_interval.hi};
    summary << "perturb-root: d=" << c.d << " eps=" << root.spec.epsilon << " interval=["
            << root.spec.certified_interval.lo << ", " << root.spec.certified_interval.hi << "]";
  } else if (c.kind == "cb-bound") {
    const auto cb = cb_lower_bound_root(c.d, c.delta);
    out = io::channel_to_json(cb.channel);
    prov["parameters"] = {{"d", c.d}, {"delta", c.delta}};
    prov["epsilon"] = cb.epsilon;
    prov["bound"] = cb.bound;
    prov["witness"] = cb.witness;
    prov["choi_min_eigenvalue"] = cb.min_eigenvalue;
    summary << "cb-bound: d=" << c.d << " bound=" << cb.bound << " witness=" << cb.witness;
  } else if (c.kind == "forgetful") {
    ForgetfulSpec spec = c.spec.empty() ? maximal_tail_spec(c.dm, c.da, c.db)
                                        : io::forgetful_spec_from_json(read_json_file(c.spec));
    if (c.eta > 0.0) spec.eta = c.eta;
    const auto built = construct_strictly_forgetful_scaled(spec);
    out = io::memory_to_json(built.channel);
    prov["parameters"] = io::forgetful_spec_to_json(spec);
    prov["eta"] = built.eta;
    summary << "forgetful: dM=" << spec.dm << " dA=" << spec.da << " dB=" << spec.db << " eta=" << built.eta;
  } else if (c.kind == "counterexample") {
    out = io::memory_to_json(counterexample_channel(c.a, c.b));
    prov["parameters"] = {{"a", c.a}, {"b", c.b}};
    summary << "counterexample: a=" << c.a << " b=" << c.b;
  } else if (c.kind == "cdc") {
    const auto kind = io::basis_kind_from_string(c.basis);
    out = io::channel_to_json(bistochastic_cdc(basis_of_kind(kind, c.d)));
    prov["parameters"] = {{"d", c.d}, {"basis", c.basis}};
    summary << "cdc: d=" << c.d;
  } else {
    throw Error(ErrorCode::parse_error, "unknown construction kind '" + c.kind + "'");
  }
  out["provenance"] = std::move(prov);
  return {out.dump(2) + "\n", summary.str()};
}

inline CommandResult cmd_verify(const CommandConfig& c) {
  require_positive_tol(c.tol);
  const json in = read_json_file(c.in);
  json report;
  std::ostringstream summary;
  if (c.memory || io::is_memory_json(in)) {
    const MemoryChannel t = io::memory_from_json(in);
    const auto cp = t.completely_positive();
    report = io::verdict_to_json(is_strictly_forgetful(t, c.tol));
    report["cp"] = cp.completely_positive;
    report["min_eigenvalue"] = cp.min_eigenvalue;
    report["tp"] = t.trace_preserving();
    summary << "memory channel: cp=" << cp.completely_positive << " strictly_forgetful="
            << report["strictly_forgetful"].get<bool>();
    if (!report["depth"].is_null()) summary << " depth=" << report["depth"].get<int>();
  } else {
    const Channel t = io::channel_from_json(in);
    const auto cp = is_completely_positive(t);
    const auto flags = structural_predicates(t);
    report["cp"] = cp.completely_positive;
    report["min_eigenvalue"] = cp.min_eigenvalue;
    report["unital"] = flags.unital;
    report["tp"] = flags.trace_preserving;
    const Channel target = bistochastic_cdc(t.basis(), t.picture());
    try {
      const auto root = verify_root_order(t, target, c.tol);
      report.update(io::root_report_to_json(root));
      summary << "channel: cp=" << cp.completely_positive << " root_order=" << root.order;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::not_a_root) throw;
      std::vector<double> residuals;
      Matrix p = identity(t.matrix().rows());
      for (int k = 1; k <= t.dim() * t.dim(); ++k) {
        p = p * t.matrix();
        residuals.push_back((p - target.matrix()).norm());
      }
      report["root_order"] = nullptr;
      report["residuals"] = residuals;
      report["jordan_block_sizes"] = nullptr;
      summary << "channel: cp=" << cp.completely_positive << " not a root of the CDC";
    }
  }
  return {report.dump(2) + "\n", summary.str()};
}

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline CommandResult cmd_correlate(const CommandConfig& c) {
  require_positive_tol(c.tol);
  if (c.samples < 1) throw Error(ErrorCode::degenerate_parameter, "--samples must be >= 1");
  const Channel t = io::channel_from_json(read_json_file(c.in));
  const auto root = verify_root_order(t, bistochastic_cdc(t.basis(), t.picture()), c.tol);
  const auto gen = ChainGenerator::from_channel(t);
  std::string csv = "gap,max_violation\r\n";
  int first_factorizing = 0;
  for (int gap = 1; gap <= t.dim() * t.dim(); ++gap) {
    const auto r = check_k_dependence(gen, gap, c.samples, c.tol, c.seed);
    csv += std::to_string(gap) + "," + format_double(r.max_violation) + "\r\n";
    if (r.factorizes && first_factorizing == 0) first_factorizing = gap;
  }
  std::ostringstream summary;
  summary << "correlate: root order " << root.order << ", factorization from gap " << first_factorizing;
  return {csv, summary.str()};
}

inline void write_output(const CommandConfig& c, const std::string& payload, std::ostream& out) {
  if (c.out.empty()) {
    out << payload;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw Error(ErrorCode::parse_error, "cannot write '" + c.out + "'");
  f << payload;
}

/// Entry point; returns the process exit code. Operation errors produce an
/// error JSON on `out` and exit code 2.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"chx: roots of completely depolarizing channels, finitely correlated states, memory channels"};
  app.require_subcommand(1);
  CommandConfig c;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "Output path (default: stdout)");
    sub->add_option("--seed", c.seed, "64-bit seed for all randomness");
    sub->add_option("--tol", c.tol, "Tolerance");
  };

  auto* construct = app.add_subcommand("construct", "Build a channel file");
  construct->add_option("kind", c.kind, "qubit-root | perturb-root | cb-bound | forgetful | counterexample | cdc")
      ->required();
  add_common(construct);
  construct->add_option("--d", c.d, "Hilbert space dimension");
  construct->add_option("--basis", c.basis, "gellmann | matrix-unit (cdc only)");
  construct->add_option("--l2", c.l2, "lambda2 (qubit-root)");
  construct->add_option("--l3", c.l3, "lambda3 (qubit-root)");
  construct->add_option("--theta", c.theta, "theta (qubit-root)");
  std::string eps_text = "auto";
  construct->add_option("--eps", eps_text, "epsilon or 'auto' (perturb-root)");
  construct->add_option("--delta", c.delta, "basis scaling delta (cb-bound)");
  construct->add_option("--a", c.a, "a (counterexample)");
  construct->add_option("--b", c.b, "b (counterexample)");
  construct->add_option("--dm", c.dm, "memory dimension (forgetful)");
  construct->add_option("--da", c.da, "input dimension (forgetful)");
  construct->add_option("--db", c.db, "output dimension (forgetful)");
  construct->add_option("--spec", c.spec, "ForgetfulSpec JSON (forgetful)");
  construct->add_option("--eta", c.eta, "fixed scale eta; default is the largest CP scale (forgetful)");

  auto* verify = app.add_subcommand("verify", "Check complete positivity, root order or forgetfulness");
  verify->add_option("--in", c.in, "Channel or memory channel JSON")->required();
  verify->add_flag("--memory", c.memory, "Treat the input as a memory channel");
  add_common(verify);

  auto* correlate = app.add_subcommand("correlate", "Factorization violation per gap as CSV");
  correlate->add_option("--in", c.in, "Root channel JSON")->required();
  correlate->add_option("--samples", c.samples, "Observable pairs per gap");
  add_common(correlate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    out << io::error_to_json(Error(ErrorCode::parse_error, e.what())).dump() << "\n";
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    CommandResult result;
    if (construct->parsed()) {
      c.command = "construct";
      if (eps_text != "auto") {
        try {
          std::size_t pos = 0;
          c.eps = std::stod(eps_text, &pos);
          if (pos != eps_text.size()) throw std::invalid_argument(eps_text);
        } catch (const std::exception&) {
          throw Error(ErrorCode::parse_error, "--eps must be a number or 'auto'");
        }
      }
      result = cmd_construct(c);
    } else if (verify->parsed()) {
      c.command = "verify";
      result = cmd_verify(c);
    } else {
      c.command = "correlate";
      result = cmd_correlate(c);
    }
    write_output(c, result.output, out);
    err << result.summary << "\n";
    return 0;
  } catch (const Error& e) {
    out << io::error_to_json(e).dump() << "\n";
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace chx::cli
