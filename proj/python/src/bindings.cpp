#include "delayoco/commands.hpp"
#include "delayoco/config.hpp"
#include "delayoco/geometry.hpp"
#include "delayoco/harness.hpp"
#include "delayoco/rng.hpp"
#include "delayoco/timeline.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace delayoco;

namespace {

py::dict profile_dict(const std::vector<std::int64_t> &d) {
    auto p = timeline::profile(timeline::realize(timeline::DelaySchedule(d)));
    py::dict out;
    out["d"] = p.d;
    out["sigma"] = p.sigma;
    out["d_star"] = p.d_star;
    out["sigma_star"] = p.sigma_star;
    out["rho"] = p.rho;
    out["beta"] = p.beta;
    out["d_tot"] = p.d_tot;
    return out;
}

py::dict trace_dict(const harness::RegretTrace &t) {
    py::dict out;
    out["T"] = t.T;
    out["seed"] = t.seed;
    out["fingerprint"] = t.fingerprint;
    out["regret"] = t.regret;
    out["total_loss"] = t.total_loss;
    out["comparator_total"] = t.comparator_total;
    out["x_star"] = t.x_star;
    out["d_tot"] = t.d_tot;
    out["sigma_max"] = t.sigma_max;
    out["skips"] = t.skips;
    out["dprime_tot"] = t.dprime_tot;
    out["drift"] = t.drift;
    out["lin_regret"] = t.lin_regret;
    out["h_eta"] = t.h_eta;
    out["packets"] = t.packets;
    out["delays"] = t.schedule.d;
    std::vector<double> losses;
    for (const auto &r : t.rounds)
        losses.push_back(r.loss);
    out["losses"] = losses;
    if (t.decomposition_checked)
        out["decomposition_pass"] = t.decomposition_pass;
    if (t.dual_audit)
        out["dual_audit_pass"] = t.dual_audit->ok();
    if (t.skip_invariants)
        out["skip_invariants_pass"] = t.skip_invariants->all();
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Online convex optimization with delayed feedback";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<CheckFailure>(m, "CheckFailure", PyExc_RuntimeError);

    m.def("philox4x32",
          [](std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
              return philox4x32(ctr, key);
          },
          py::arg("counter"), py::arg("key"));

    m.def("profile", &profile_dict, py::arg("delays"),
          "Delay profile (0-based rho and beta) of a delay schedule.");
    m.def("verify_identities",
          [](const std::vector<std::int64_t> &d) {
              auto p = timeline::profile(timeline::realize(timeline::DelaySchedule(d)));
              py::dict out;
              for (const auto &c : timeline::verify_identities(p).checks)
                  out[py::str(c.name)] = c.pass;
              return out;
          },
          py::arg("delays"));

    m.def("project_ball",
          [](const Vector &x, const Vector &center, double radius) {
              return geometry::project(geometry::Domain::ball(center, radius), x);
          },
          py::arg("x"), py::arg("center"), py::arg("radius"));
    m.def("project_box",
          [](const Vector &x, const Vector &lo, const Vector &hi) {
              return geometry::project(geometry::Domain::box(lo, hi), x);
          },
          py::arg("x"), py::arg("lo"), py::arg("hi"));

    m.def("run_episode",
          [](const std::string &yaml, std::optional<std::uint64_t> seed, bool audit) {
              auto cfg = config::parse_config(yaml);
              harness::EpisodeOptions eo;
              eo.audit = audit;
              eo.keep_rounds = true;
              harness::RegretTrace tr;
              {
                  py::gil_scoped_release nogil;
                  tr = harness::run_episode(cfg.env, cfg.player, seed ? *seed : cfg.seed, eo);
              }
              return trace_dict(tr);
          },
          py::arg("config"), py::arg("seed") = py::none(), py::arg("audit") = false,
          "Runs one episode of a YAML experiment config.");

    m.def("sweep",
          [](const std::string &yaml, int threads) {
              auto cfg = config::parse_config(yaml);
              std::vector<harness::SweepRow> table;
              {
                  py::gil_scoped_release nogil;
                  table = harness::sweep(cfg.T_grid, cfg.seeds, cfg.env, cfg.player, threads).table;
              }
              py::list out;
              for (const auto &r : table) {
                  py::dict d;
                  d["T"] = r.T;
                  d["mean"] = r.mean;
                  d["std"] = r.std;
                  d["min"] = r.min;
                  d["max"] = r.max;
                  d["n"] = r.n;
                  out.append(d);
              }
              return out;
          },
          py::arg("config"), py::arg("threads") = 1);

    m.def("fit_scaling",
          [](const std::vector<double> &T, const std::vector<double> &y) {
              auto f = harness::fit_scaling(T, y);
              return py::make_tuple(f.slope, f.intercept, f.residual);
          },
          py::arg("T"), py::arg("y"));

    m.def("verify",
          [](const std::string &yaml, const std::string &out_dir) {
              auto cfg = config::parse_config(yaml);
              commands::Options opt;
              opt.out = out_dir;
              std::ostringstream log;
              int code = commands::cmd_verify(cfg, opt, log);
              return py::make_tuple(code, log.str());
          },
          py::arg("config"), py::arg("out_dir"));
}
