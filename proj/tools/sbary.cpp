// sbary: barrier weights, verification reports, matrix-field factorization
// and monotone stencils from the command line.
//
// Exit status: 0 when every check passes, 1 on check failures or per-point
// errors, 2 on unreadable or malformed input.

#include "sbary/sbary.hpp"
#include "sbary_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace sbary;
using io::json;

constexpr std::uint64_t kDefaultSeed = 20240607;

struct Globals {
  std::uint64_t seed = kDefaultSeed;
  std::string out;
  bool quiet = false;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void say(const Globals& g, const std::string& line) {
  if (!g.quiet) std::cout << line << '\n';
}

void emit(const Globals& g, const std::string& path, const json& doc) {
  if (path.empty()) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  io::write_json_atomic(path, doc);
  say(g, "wrote " + path);
}

Polytope load_polytope(const std::string& path) {
  return io::polytope_from_json(io::parse_json(io::read_file(path), path), path);
}

// ---- weights ----------------------------------------------------------------

int run_weights(const Globals& g, const std::string& poly_path, const std::string& pts_path,
                double tol) {
  const auto P = load_polytope(poly_path);
  const auto table = io::parse_csv(io::read_file(pts_path), pts_path);
  if (table.rows.front().size() != static_cast<std::size_t>(P.ambient_dim()))
    throw io::InputError(pts_path + ": expected " + std::to_string(P.ambient_dim()) +
                         " columns per point, got " + std::to_string(table.rows.front().size()));

  SolverOptions opts;
  if (tol > 0.0) opts.tol = tol;
  std::vector<Vector> chart_pts;
  std::vector<std::optional<std::string>> off_hull(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const Vector y = io::row_slice(table.rows[i], 0, table.rows[i].size());
    const double r = P.chart().hull_residual(y);
    if (r > 1e-9 * std::max(1.0, P.diameter()))
      off_hull[i] = "point is off the affine hull (distance " + std::to_string(r) + ")";
    chart_pts.push_back(P.chart().to_chart(y));
  }
  const auto solved = batch_solve(P, chart_pts, opts);

  json points = json::array();
  int failed = 0;
  for (std::size_t i = 0; i < solved.size(); ++i) {
    json e;
    e["index"] = i;
    e["x"] = table.rows[i];
    if (off_hull[i]) {
      e["error"] = io::error_json(ErrorKind::outside_polytope, *off_hull[i]);
      ++failed;
    } else if (!solved[i].ok()) {
      e["error"] = io::error_json(*solved[i].error_kind, solved[i].error);
      ++failed;
    } else {
      const auto& s = *solved[i].solution;
      e["weights"] = io::to_json(s.weights);
      e["lambda"] = s.lambda.allFinite() ? io::to_json(P.chart().direction_to_ambient(s.lambda))
                                         : json(nullptr);
      e["barrier"] = std::isfinite(s.barrier) ? json(s.barrier) : json(nullptr);
      e["residual"] = s.residual;
      e["iterations"] = s.iterations;
    }
    points.push_back(std::move(e));
  }
  json doc = {{"header", io::header("weights", g.seed)},
              {"polytope", io::polytope_to_json(P)},
              {"points", points},
              {"summary", {{"solved", static_cast<int>(solved.size()) - failed}, {"failed", failed}}}};
  emit(g, g.out, doc);
  say(g, std::to_string(solved.size() - static_cast<std::size_t>(failed)) + " of " +
             std::to_string(solved.size()) + " points solved");
  return failed == 0 ? 0 : 1;
}

// ---- verify -----------------------------------------------------------------

int run_verify(const Globals& g, const std::string& poly_path, int samples,
               const std::string& report) {
  const auto P = load_polytope(poly_path);
  if (samples < 1) throw io::InputError("--samples: must be positive");
  VerifyOptions opts;
  opts.seed = g.seed;
  opts.samples = samples;
  const auto rep = run_verification(P, opts);
  json doc = {{"header", io::header("verify", g.seed)}, {"report", io::to_json(rep)}};
  emit(g, report.empty() ? g.out : report, doc);
  for (const auto& c : rep.checks.checks)
    say(g, std::string(c.passed ? "  ok    " : "  FAIL  ") + c.name + "  worst=" + sci(c.worst));
  for (const auto& e : rep.errors) say(g, "  error " + e);
  say(g, rep.passed() ? "verification passed" : "verification FAILED");
  return rep.passed() ? 0 : 1;
}

// ---- lipschitz --------------------------------------------------------------

int run_lipschitz(const Globals& g, const std::string& poly_path, const std::string& field_path) {
  const auto P = load_polytope(poly_path);
  const auto table = io::parse_csv(io::read_file(field_path), field_path);
  const auto rows = io::split_rows(table, static_cast<std::size_t>(P.ambient_dim()), field_path);
  SampledField f;
  for (const auto& [y, u] : rows) {
    f.y.push_back(y);
    f.u.push_back(u);
  }
  f.shape = io::infer_grid_shape(f.y, field_path);

  json doc = {{"header", io::header("lipschitz", g.seed)}, {"polytope", P.name()}, {"shape", f.shape}};
  int code = 0;
  try {
    const auto est = estimate_sqrt_lipschitz(P, f);
    doc["per_vertex"] = est.per_vertex;
    doc["coarse_per_vertex"] = est.coarse_per_vertex;
    doc["refinement_ratio"] = est.refinement_ratio;
    doc["stable"] = est.stable;
    doc["second_difference_sup"] = est.second_difference_sup;
    doc["ceiling_shape"] = est.ceiling_shape;
    code = est.stable ? 0 : 1;
    double top = 0.0;
    for (double v : est.per_vertex) top = std::max(top, v);
    say(g, "max Lipschitz constant of sqrt p_k: " + sci(top) +
               (est.stable ? "" : " (unstable under refinement)"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_input) throw io::InputError(field_path + ": " + e.what());
    doc["error"] = io::error_json(e.kind(), e.what());
    code = 1;
    say(g, std::string("error: ") + e.what());
  }
  emit(g, g.out, doc);
  return code;
}

// ---- factorize --------------------------------------------------------------

int run_factorize(const Globals& g, const std::string& model_spec, const std::string& field_path) {
  const auto model = io::resolve_model(model_spec);
  const auto m = static_cast<std::size_t>(model.embedding.matrix_dim());
  const auto table = io::parse_csv(io::read_file(field_path), field_path);
  const auto rows = io::split_rows(table, m * m, field_path);

  std::vector<std::pair<Vector, Matrix>> samples;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Matrix u(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        u(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            rows[i].second(static_cast<Eigen::Index>(a * m + b));
    if ((u - u.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, u.norm()))
      throw io::InputError(field_path + ": row " + std::to_string(i) + ": matrix is not symmetric");
    samples.push_back({rows[i].first, u});
  }

  // Fast path: the whole field at once. On failure, redo pointwise so every
  // bad sample gets its own error entry.
  std::vector<std::optional<SampleFactorization>> done(samples.size());
  std::vector<std::optional<json>> errors(samples.size());
  try {
    auto F = factorize_field(model, samples);
    for (std::size_t i = 0; i < samples.size(); ++i) done[i] = std::move(F.samples[i]);
  } catch (const Error&) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      try {
        done[i] = factorize_point(model, samples[i].second, {}, samples[i].first);
      } catch (const Error& e) {
        errors[i] = io::error_json(e.kind(), e.what());
      }
    }
  }

  json dirs = json::array();
  for (const auto& d : model.directions) dirs.push_back(io::to_json(d));
  json out = json::array();
  int failed = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    json e = {{"index", i}, {"y", io::to_json(samples[i].first)}};
    if (errors[i]) {
      e["error"] = *errors[i];
      ++failed;
    } else {
      const auto& s = *done[i];
      e["weights"] = io::to_json(s.weights);
      e["coefficients"] = io::to_json(s.direction_coefficients);
      e["reconstruction_error"] = s.reconstruction_error;
      worst = std::max(worst, s.reconstruction_error);
      if (!(s.reconstruction_error <= 1e-9)) ++failed;
    }
    out.push_back(std::move(e));
  }
  json doc = {{"header", io::header("factorize", g.seed)},
              {"model", model.name},
              {"directions", dirs},
              {"samples", out},
              {"summary",
               {{"samples", samples.size()}, {"failed", failed}, {"worst_reconstruction_error", worst}}}};
  emit(g, g.out, doc);
  say(g, std::to_string(samples.size()) + " samples, " + std::to_string(failed) +
             " failed, worst reconstruction error " + sci(worst));
  return failed == 0 ? 0 : 1;
}

// ---- stencil ----------------------------------------------------------------

int run_stencil(const Globals& g, const std::string& model_spec, const std::string& point_path,
                double h) {
  if (!(h > 0.0)) throw io::InputError("--h: must be positive");
  const auto model = io::resolve_model(model_spec);
  const Matrix u = io::matrix_from_json(io::parse_json(io::read_file(point_path), point_path), point_path);
  if (u.rows() != model.embedding.matrix_dim() || u.cols() != u.rows())
    throw io::InputError(point_path + ": matrix: expected " +
                         std::to_string(model.embedding.matrix_dim()) + "x" +
                         std::to_string(model.embedding.matrix_dim()));

  json doc = {{"header", io::header("stencil", g.seed)}, {"model", model.name}};
  int code = 0;
  try {
    const auto s = factorize_point(model, u);
    const auto spec = build_stencil(model, s, h);
    json entries = json::array();
    for (const auto& e : spec.entries) {
      json j;
      if (e.on_lattice()) j["offset"] = e.lattice;
      else j["offset"] = io::to_json(e.offset);
      j["coeff"] = e.coeff;
      j["on_lattice"] = e.on_lattice();
      entries.push_back(std::move(j));
    }
    json dirs = json::array();
    for (const auto& d : spec.directions) dirs.push_back(io::to_json(d));
    doc["h"] = spec.h;
    doc["entries"] = entries;
    doc["center"] = spec.center;
    doc["directions"] = dirs;
    doc["direction_weights"] = spec.direction_weights;
    if (!spec.all_on_lattice()) {
      doc["warning"] = "some directions are not on the integer lattice";
      code = 1;
    }
    say(g, std::to_string(spec.entries.size()) + " off-center entries, center " + sci(spec.center));
  } catch (const Error& e) {
    doc["error"] = io::error_json(e.kind(), e.what());
    code = 1;
    say(g, std::string("error: ") + e.what());
  }
  emit(g, g.out, doc);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Barrier weights on convex polytopes, matrix-field factorization and monotone stencils"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for randomized suites")->capture_default_str();
  app.add_option("--out", g.out, "Output JSON path (stdout when omitted)");
  app.add_flag("--quiet", g.quiet, "No summary on standard output");

  std::string polytope, points, field, model, point, report;
  double tol = 0.0, h = 0.0;
  int samples = 50;

  auto* w = app.add_subcommand("weights", "Barrier weights at a list of points");
  w->add_option("--polytope", polytope, "Polytope JSON")->required();
  w->add_option("--points", points, "Points CSV, one ambient point per row")->required();
  w->add_option("--tol", tol, "Newton tolerance (relative)");

  auto* v = app.add_subcommand("verify", "Randomized identity and bound suite");
  v->add_option("--polytope", polytope, "Polytope JSON")->required();
  v->add_option("--samples", samples, "Random interior points")->capture_default_str();
  v->add_option("--report", report, "Report JSON path");

  auto* l = app.add_subcommand("lipschitz", "Lipschitz constants of sqrt p_k along a sampled field");
  l->add_option("--polytope", polytope, "Polytope JSON")->required();
  l->add_option("--field", field, "Field CSV: y columns then ambient columns")->required();

  auto* f = app.add_subcommand("factorize", "Fixed-direction factorization of a matrix field");
  f->add_option("--model", model, "dd2, dd3 or file:model.json")->required();
  f->add_option("--field", field, "Field CSV: y columns then m*m row-major entries")->required();

  auto* s = app.add_subcommand("stencil", "Monotone stencil at one matrix");
  s->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  s->add_option("--model", model, "dd2, dd3 or file:model.json")->required();
  s->add_option("--point", point, "JSON {\"matrix\": [[...]]}")->required();
  s->add_option("--h", h, "Mesh size")->required();

  // Global flags are accepted after the subcommand as well.
  for (auto* sub : {w, v, l, f, s}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*w) return run_weights(g, polytope, points, tol);
    if (*v) return run_verify(g, polytope, samples, report);
    if (*l) return run_lipschitz(g, polytope, field);
    if (*f) return run_factorize(g, model, field);
    if (*s) return run_stencil(g, model, point, h);
  } catch (const io::InputError& e) {
    std::cerr << "sbary: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "sbary: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::invalid_input ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "sbary: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
