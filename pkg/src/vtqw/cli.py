"""Scenario runner CLI.

Commands: ``vtqw net stats``, ``vtqw pe decide``, ``vtqw walk run``,
``vtqw search compare``, ``vtqw mnrs verify``, ``vtqw compose decide``,
``vtqw suite run``. Every command reads JSON documents, writes a
deterministic JSON report (``--out`` or stdout), and embeds the tolerance
configuration it ran under. ``VTQW_MAX_DIM`` caps the Hilbert dimension.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import alg_compose, frameworks, network, phase_estimation, walk_compose
from .config import DEFAULT, Config
from .network import Distribution, network_from_dict
from .report import render_report
from .subroutine import alpha_sequence, subroutine_from_dict


class ScenarioError(click.ClickException):
    pass


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON in {path}: line {exc.lineno} "
                            f"column {exc.colno}: {exc.msg}")


def _emit(report: dict, out: str | None, config: Config) -> None:
    text = render_report(report, config)
    if out:
        Path(out).write_text(text, encoding="ascii")
    else:
        click.echo(text, nl=False)


def _config_with(kappa: float | None = None, tol: float | None = None,
                 eta: float | None = None) -> Config:
    overrides = {}
    if kappa is not None:
        overrides["kappa"] = kappa
    if tol is not None:
        overrides["tol_state"] = tol
    if eta is not None:
        overrides["eta"] = eta
    return dataclasses.replace(DEFAULT, **overrides) if overrides else DEFAULT


def _distribution(doc, fallback_point=None) -> Distribution:
    if doc is None:
        return Distribution.point(fallback_point)
    return Distribution({k: float(v) for k, v in doc.items()})


@click.group()
def main():
    """Variable-time quantum walk laboratory."""


@main.group()
def net():
    """Network statistics and electric quantities."""


@net.command("stats")
@click.argument("graph_file")
@click.option("--out", default=None, help="write the JSON report here")
def net_stats(graph_file, out):
    """Total weight, stationary distribution, gap, requested resistances."""
    doc = _load_json(graph_file)
    g = network_from_dict(doc)
    report = {
        "scenario": {"kind": "net-stats", "graph": graph_file},
        "W": network.total_weight(g),
        "pi": {str(u): p for u, p in
               network.stationary_distribution(g).weights.items()},
        "spectral_gap": network.spectral_gap(g),
    }
    if doc.get("sigma") and doc.get("M"):
        sigma = _distribution(doc["sigma"])
        report["R_sigma_M"] = network.effective_resistance(g, sigma, doc["M"])
        report["commute_time"] = network.commute_time(g, sigma, doc["M"])
    _emit(report, out, DEFAULT)


@main.group()
def pe():
    """Phase-estimation instances."""


@pe.command("decide")
@click.argument("instance_file")
@click.option("--mode", type=click.Choice(["spectral", "circuit"]),
              default="spectral")
@click.option("--kappa", type=float, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--c-minus", type=float, default=None,
              help="override the document's C- bound")
@click.option("--out", default=None)
def pe_decide(instance_file, mode, kappa, seed, c_minus, out):
    """Run the decision procedure on a serialized instance."""
    doc = _load_json(instance_file)
    config = _config_with(kappa=kappa)
    inst = phase_estimation.instance_from_dict(
        doc, config=config,
        require_psi0_orthogonal=doc.get("require_psi0_orthogonal", True))
    c_minus = doc.get("c_minus", 1.0) if c_minus is None else c_minus
    decision = phase_estimation.decide(
        inst, c_minus, c_plus_bound=doc.get("c_plus"), mode=mode, seed=seed)
    report = {
        "scenario": {"kind": "pe-decide", "instance": instance_file,
                     "mode": mode, "seed": seed, "c_minus": c_minus},
        "decision": decision.label,
        "m_delta": decision.m_delta,
        "delta": decision.delta,
        "query_estimate": decision.query_estimate,
        "phase_histogram": decision.diagnostics["phase_histogram"],
        "diagnostics": {k: v for k, v in decision.diagnostics.items()
                        if k != "phase_histogram"},
    }
    _emit(report, out, config)


def _walk_instance_from_scenario(doc: dict, config: Config):
    g = network_from_dict(doc["graph"] if isinstance(doc["graph"], dict)
                          else _load_json(doc["graph"]))
    sub_doc = (doc["subroutine"] if isinstance(doc["subroutine"], dict)
               else _load_json(doc["subroutine"]))
    sub = subroutine_from_dict(sub_doc, config=config)
    ext = walk_compose.walk_extension(
        g, answer_controlled=doc.get("answer_controlled", False))
    graph_doc = doc["graph"] if isinstance(doc["graph"], dict) else _load_json(doc["graph"])
    v0 = graph_doc.get("V0") or doc.get("V0")
    v_m = graph_doc.get("V_M") or doc.get("V_M")
    marked = doc.get("M", graph_doc.get("M", []))
    sigma = _distribution(doc.get("sigma", graph_doc.get("sigma")),
                          fallback_point=v0[0] if v0 else None)
    r_bound = float(doc["R"])
    w_bound = float(doc["W"])
    inst = walk_compose.assemble(
        g, v0, v_m, marked, sigma, sub, ext, doc.get("alpha", "linear"),
        w0=doc.get("w0", 1.0 / r_bound), w_marked=doc.get("wM"), config=config)
    return inst, r_bound, w_bound


@main.group()
def walk():
    """Edge-composed quantum walks."""


@walk.command("run")
@click.argument("scenario_file")
@click.option("--mode", type=click.Choice(["spectral", "circuit"]),
              default="spectral")
@click.option("--seed", type=int, default=0)
@click.option("--kappa", type=float, default=None)
@click.option("--out", default=None)
def walk_run(scenario_file, mode, seed, kappa, out):
    """Assemble the scenario's walk instance and decide M = empty or not."""
    doc = _load_json(scenario_file)
    config = _config_with(kappa=kappa)
    inst, r_bound, w_bound = _walk_instance_from_scenario(doc, config)
    theta = None
    if inst.marked:
        theta = network.min_energy_flow_to_set(inst.net, inst.sigma, inst.marked)
    conditions = inst.check_conditions(r_bound, w_bound, theta=theta)
    decision, cost = inst.run(r_bound, w_bound, mode=mode, seed=seed)
    if inst.marked:
        cert = inst.build_positive_witness(theta)
        witness_diag = {"kind": cert.kind, "delta": cert.delta,
                        "c_plus": cert.complexity,
                        "psi0_overlap": [cert.overlap.real, cert.overlap.imag]}
    else:
        cert = inst.build_negative_witness()
        witness_diag = {"kind": cert.kind, "delta_prime": cert.delta,
                        "c_minus": cert.complexity}
    report = {
        "scenario": {"kind": "walk", "file": scenario_file, "mode": mode,
                     "seed": seed, "R": r_bound, "W": w_bound},
        "decision": decision.label,
        "m_delta": decision.m_delta,
        "conditions": conditions.as_dict(),
        "witness_diagnostics": witness_diag,
        "cost_estimate": cost,
    }
    _emit(report, out, config)


@main.group()
def search():
    """Variable-time search."""


@search.command("compare")
@click.argument("instance_file")
@click.option("--out", default=None, help="CSV output path (default stdout)")
def search_compare(instance_file, out):
    """CSV of the three complexity expressions over the allowed marked sets."""
    doc = _load_json(instance_file)
    si = frameworks.SearchInstance(
        n=int(doc["n"]),
        pi=Distribution({int(k): float(v) for k, v in doc["pi"].items()}),
        laws={int(k): [(int(t), float(p)) for t, p in v]
              for k, v in doc["laws"].items()},
        g={int(k): int(v) for k, v in doc.get("g", {}).items()},
        eps=doc.get("eps"))
    marked_sets = doc.get("marked_sets") or [si.marked_set() or
                                             [list(range(1, si.n + 1))[0]]]
    lines = ["marked,expr1,expr2,expr3"]
    for marked in marked_sets:
        rep = frameworks.vt_search_complexities(si, marked)
        lines.append("%s,%.17g,%.17g,%.17g" % (
            "|".join(str(i) for i in marked), rep.value("expr1"),
            rep.value("expr2"), rep.value("expr3")))
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.group()
def mnrs():
    """MNRS-style reductions."""


@mnrs.command("verify")
@click.argument("scenario_file")
@click.option("--seed", type=int, default=0)
@click.option("--out", default=None)
def mnrs_verify(scenario_file, seed, out):
    """Flow inequality margins and analytic-vs-MC departure counts."""
    doc = _load_json(scenario_file)
    g = network_from_dict(doc["graph"] if isinstance(doc["graph"], dict)
                          else _load_json(doc["graph"]))
    marked = doc["M"]
    p = float(doc.get("p", 0.5))
    res = frameworks.mnrs_flow(g, marked, p)
    means, stderr, tau_est = frameworks.mnrs_process_mc(
        g, marked, p, runs=int(doc.get("mc_runs", 20000)), seed=seed)
    report = {
        "scenario": {"kind": "mnrs", "file": scenario_file, "p": p,
                     "seed": seed},
        "inequality_lhs": res.energy_ratio,
        "inequality_rhs": res.expected_steps,
        "inequality_margin": res.inequality_margin(),
        "departures_analytic": list(res.expected_departures),
        "departures_mc": list(means),
        "departures_stderr": list(stderr),
        "expected_steps_mc": {"estimate": tau_est.estimate,
                              "stderr": tau_est.stderr,
                              "walks": tau_est.walks, "seed": tau_est.seed},
    }
    _emit(report, out, DEFAULT)


@main.group()
def compose():
    """Outer-algorithm composition."""


@compose.command("decide")
@click.argument("scenario_file")
@click.option("--mode", type=click.Choice(["spectral", "circuit"]),
              default="spectral")
@click.option("--seed", type=int, default=0)
@click.option("--eta", type=float, default=None)
@click.option("--out", default=None)
def compose_decide(scenario_file, mode, seed, eta, out):
    """Decide f(g) for the composed scenario."""
    doc = _load_json(scenario_file)
    config = _config_with(eta=eta)
    outer_doc = doc["outer"]
    dim = (int(outer_doc["n"]) + 1) * 2 * int(outer_doc["Y"])
    ops = []
    for op in outer_doc["unitaries"]:
        if op == "query":
            ops.append("query")
        else:
            ops.append(np.array([complex(re, im) for re, im in op],
                                dtype=complex).reshape(dim, dim))
    outer = alg_compose.OuterAlgorithm(
        int(outer_doc["n"]), int(outer_doc["Y"]), ops,
        eps_outer=float(outer_doc.get("eps_O", 0.0)), config=config)
    sub = subroutine_from_dict(doc["inner"], config=config)
    bit, diagnostics = alg_compose.decide_composed(
        outer, sub, mode=mode, seed=seed, eta=eta, config=config)
    report = {
        "scenario": {"kind": "compose", "file": scenario_file, "mode": mode,
                     "seed": seed},
        "output": bit,
        "q_bar": {str(k): v for k, v in diagnostics["qbar"].items()},
        "T_avg": diagnostics["parameters"]["T_avg"],
        "eps_avg": diagnostics["parameters"]["eps_avg"],
        "parameters": {k: diagnostics["parameters"][k]
                       for k in ("w0", "w1_out", "w0_out", "c_minus",
                                 "c_plus", "error_condition_ok",
                                 "error_condition_ratio")},
        "decision_diagnostics": {"decision": diagnostics["decision"],
                                 "m_delta": diagnostics["m_delta"],
                                 "margin": diagnostics["margin"],
                                 "dimension": diagnostics["dimension"]},
        "cost_estimate": diagnostics["cost_estimate"],
    }
    _emit(report, out, config)


@main.group()
def suite():
    """Scenario suites."""


_RUNNERS = {
    "net-stats": lambda path, ctx: ctx.invoke(net_stats, graph_file=path, out=None),
}


@suite.command("run")
@click.argument("manifest_file")
@click.option("--out", default=None)
@click.pass_context
def suite_run(ctx, manifest_file, out):
    """Run every scenario in the manifest; nonzero exit on any failure."""
    doc = _load_json(manifest_file)
    scenarios = doc.get("scenarios", [])
    base = Path(manifest_file).parent
    results = []
    failures = 0
    if not scenarios:
        click.echo("warning: empty manifest", err=True)
    for entry in scenarios:
        path = str(base / entry) if not Path(entry).is_absolute() else entry
        sdoc = _load_json(path)
        kind = sdoc.get("kind")
        try:
            if kind == "net-stats":
                ctx.invoke(net_stats, graph_file=path, out="/dev/null"
                           if sys.platform != "win32" else None)
                ok, detail = True, {}
            elif kind == "walk":
                inst, r_bound, w_bound = _walk_instance_from_scenario(sdoc, DEFAULT)
                decision, _ = inst.run(r_bound, w_bound,
                                       seed=int(sdoc.get("seed", 0)))
                expected = sdoc.get("expected_decision")
                ok = expected is None or decision.label == expected
                detail = {"decision": decision.label, "expected": expected}
            elif kind == "mnrs":
                g = network_from_dict(sdoc["graph"])
                res = frameworks.mnrs_flow(g, sdoc["M"], float(sdoc.get("p", 0.5)))
                ok = res.inequality_margin() >= -1e-9
                detail = {"margin": res.inequality_margin()}
            else:
                ok, detail = False, {"error": f"unknown scenario kind {kind!r}"}
        except Exception as exc:  # scenario failures are reported, not raised
            ok, detail = False, {"error": str(exc)}
        failures += 0 if ok else 1
        results.append({"scenario": entry, "kind": kind, "passed": ok,
                        "detail": detail})
    report = {"scenario": {"kind": "suite", "manifest": manifest_file},
              "results": results,
              "passed": failures == 0,
              "failures": failures}
    _emit(report, out, DEFAULT)
    if failures:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
