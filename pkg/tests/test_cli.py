"""CLI: expression grammar, verbs, exit codes, output stability.

Everything drives `cli.run` in-process; one test goes through the installed
`cpr` entry point to cover the console wiring.
"""

import json
import random
import subprocess
from fractions import Fraction as F

import pytest

from conftest import (
    a2_graph,
    infinite_emitter_graph,
    psi_zero_system,
    random_graph_element,
    three_vertex_two_cycle,
    perm3_system,
)

from cprings import cli
from cprings.cli import (
    EvalContext,
    ExprSyntaxError,
    UnknownGenerator,
    format_element,
    parse_element,
)
from cprings.graphalg import graph_to_json, line_graph, rose_graph
from cprings.rsystem import build_graph_system, system_to_json
from cprings.toeplitz import embed, toeplitz_mul


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    out = {}
    for name, payload in [
        ("a2", graph_to_json(a2_graph())),
        ("line3", graph_to_json(line_graph(3))),
        ("rose2", graph_to_json(rose_graph(2))),
        ("3v2c", graph_to_json(three_vertex_two_cycle())),
        ("inf", graph_to_json(infinite_emitter_graph())),
        ("perm3", system_to_json(perm3_system())),
        ("psizero", system_to_json(psi_zero_system())),
    ]:
        p = root / f"{name}.json"
        p.write_text(json.dumps(payload))
        out[name] = str(p)
    return out


def run_json(*argv):
    code, body = cli.run(list(argv))
    return code, json.loads(body)


# -- parsing ----------------------------------------------------------------


def test_parse_two_token_product(files):
    sy = build_graph_system(line_graph(3))
    ctx = EvalContext(sy, line_graph(3), "toeplitz")
    x = parse_element("R:v1 * Q:e1", ctx)
    assert x == toeplitz_mul(embed(sy, "R", [1, 0, 0]), embed(sy, "Q", [1, 0]))
    assert parse_element("Q:e1", ctx) == embed(sy, "Q", [1, 0])


def test_parse_ck_relation_shape(files):
    g = a2_graph()
    sy = build_graph_system(g)
    ctx = EvalContext(sy, g, "toeplitz")
    x = parse_element("p(u) - x(e)*y(e)", ctx)
    assert x.support() == [(0, 0), (1, 1)]
    assert x.component((0, 0)) == (F(1), F(0))


def test_parse_rationals_parens_paths():
    g = line_graph(3)
    sy = build_graph_system(g)
    ctx = EvalContext(sy, g, "toeplitz")
    x = parse_element("3/2 R:v1 - 2 R:v1", ctx)
    assert x.component((0, 0)) == (F(-1, 2), F(0), F(0))
    y = parse_element("(p(v1) + p(v2)) * x(e1)", ctx)
    assert y == parse_element("x(e1)", ctx)
    path = parse_element("x(e1 e2)", ctx)
    assert path.support() == [(2, 0)]
    ghost = parse_element("y(e1 e2)", ctx)
    assert ghost.support() == [(0, 2)]
    # y(path) is the mirror of x(path): their product contracts to a vertex
    assert toeplitz_mul(path, ghost).support() == [(2, 2)]
    assert parse_element("y(e1 e2) * x(e1 e2)", ctx) == parse_element("p(v3)", ctx)


def test_parse_errors():
    g = line_graph(3)
    sy = build_graph_system(g)
    ctx = EvalContext(sy, g, "toeplitz")
    with pytest.raises(ExprSyntaxError) as exc:
        parse_element("p(v1) +", ctx)
    assert exc.value.lineno == 1 and exc.value.offset == 8
    with pytest.raises(ExprSyntaxError):
        parse_element("* p(v1)", ctx)
    with pytest.raises(ExprSyntaxError):
        parse_element("p(v1) p(v2)", ctx)
    with pytest.raises(UnknownGenerator):
        parse_element("p(nope)", ctx)
    with pytest.raises(UnknownGenerator):
        parse_element("x(e9)", ctx)
    with pytest.raises(UnknownGenerator):
        parse_element("x(e2 e1)", ctx)  # not composable
    with pytest.raises(UnknownGenerator):
        parse_element("R:bogus", ctx)
    with pytest.raises(ValueError):
        EvalContext(None, None, "lpa")  # the LPA backend needs a graph
    with pytest.raises(ValueError):
        EvalContext(None, g, "fock")  # unknown backend name


def test_round_trip_toeplitz():
    g = three_vertex_two_cycle()
    sy = build_graph_system(g)
    ctx = EvalContext(sy, g, "toeplitz")
    rng = random.Random(99)
    checked = 0
    while checked < 25:
        x = random_graph_element(rng, sy, 3)
        if x.is_zero():
            continue
        assert parse_element(format_element(x), ctx) == x
        checked += 1


def test_round_trip_lpa():
    g = three_vertex_two_cycle()
    ctx = EvalContext(None, g, "lpa")
    rng = random.Random(7)
    atoms = ["p(a)", "x(e_ab)", "y(e_ba)", "x(e_ab e_ba)", "x(e_ac)", "y(e_ab)*y(e_ba)"]
    checked = 0
    while checked < 25:
        text = " + ".join(
            f"{rng.randint(-3, 3)} {rng.choice(atoms)}" for _ in range(rng.randint(1, 3))
        )
        x = parse_element(text, ctx)
        if x.is_zero():
            continue
        assert parse_element(format_element(x), ctx) == x
        checked += 1


# -- verbs ------------------------------------------------------------------


def test_validate(files):
    code, out = run_json("validate", files["a2"])
    assert code == 0 and out["ok"] and out["result"]["failures"] == []
    code, out = run_json("validate", files["perm3"])
    assert code == 0 and out["ok"]


def test_validate_bad_system(tmp_path):
    # swapping Q's twisted right action with its plain left action breaks the
    # balance of psi (the twist by phi stops matching)
    bad = system_to_json(perm3_system())
    bad["q"]["left"], bad["q"]["right"] = bad["q"]["right"], bad["q"]["left"]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    code, out = run_json("validate", str(p))
    assert code == 1 and not out["ok"] and out["result"]["failures"]


def test_jmax_example(files):
    code, out = run_json("jmax", files["a2"])
    assert code == 0
    assert out["result"]["j_max"] == ["u"]
    assert out["result"]["ker_delta"] == ["v"]
    assert out["result"]["hypothesis_ok"] is True


def test_lattice_counts(files):
    code, body = cli.run(["lattice", files["rose2"], "--format", "dot"])
    assert code == 0
    assert body.count("label") == 3  # Toeplitz-level T-pairs of L_2
    code, out = run_json("lattice", files["line3"])
    assert code == 0
    assert len(out["result"]["tpairs"]["nodes"]) == 8
    assert len(out["result"]["graph_pairs"]["nodes"]) == 2
    code, out = run_json("lattice", files["perm3"])
    assert code == 0 and "graph_pairs" not in out["result"]


def test_lattice_infinite_emitter_fallback(files):
    code, out = run_json("lattice", files["inf"])
    assert code == 0
    assert "tpairs" not in out["result"]
    assert len(out["result"]["graph_pairs"]["nodes"]) == 6
    assert any("skipped" in d for d in out["diagnostics"])
    code, body = cli.run(["lattice", files["inf"], "--format", "dot"])
    assert code == 0 and body.startswith("digraph") and body.count("label") == 6


def test_eq_exit_codes(files):
    code, out = run_json("eq", files["a2"], "p(u)", "x(e)*y(e)")
    assert code == 0 and out["ok"] and out["result"]["equal"]
    code, out = run_json("eq", files["a2"], "p(u)", "x(e)*y(e)", "--ring", "toeplitz")
    assert code == 1 and not out["ok"] and not out["result"]["equal"]
    code, out = run_json("eq", files["perm3"], "Q:v1*P:v2", "R:v1", "--j", "full")
    assert code == 0 and out["ok"]


def test_mul(files):
    code, out = run_json("mul", files["a2"], "x(e)", "y(e)")
    assert code == 0 and out["result"]["support"] == [[1, 1]]
    code, out = run_json("mul", files["a2"], "y(e)", "x(e)")
    assert code == 0 and out["result"]["element"] == "R:v"
    code, out = run_json("mul", files["a2"], "x(e)", "x(e)")
    assert code == 0 and out["result"]["zero"] is True


def test_nf_backends(files):
    code, out = run_json("nf", files["a2"], "p(u) - x(e)*y(e)")
    assert code == 0 and out["result"]["backend"] == "lpa"
    assert out["result"]["zero"] is True
    code, out = run_json("nf", files["a2"], "p(u) - x(e)*y(e)", "--backend", "toeplitz")
    assert out["result"]["element"] == "R:u - Q:e*P:e"
    # printed form re-parses to the same element
    sy = build_graph_system(a2_graph())
    ctx = EvalContext(sy, a2_graph(), "toeplitz")
    assert parse_element(out["result"]["element"], ctx) == parse_element(
        "p(u) - x(e)*y(e)", ctx
    )
    code, out = run_json("nf", files["perm3"], "Q:v1 * P:v1")
    assert code == 0 and out["result"]["backend"] == "toeplitz"
    code, out = run_json("nf", files["perm3"], "R:v1", "--backend", "lpa")
    assert code == 2  # lpa backend needs a graph


def test_fs(files):
    code, out = run_json("fs", files["a2"])
    assert code == 0 and out["result"]["fs"]
    code, out = run_json("fs", files["psizero"])
    assert code == 1 and not out["ok"] and not out["result"]["fs"]


def test_tpair(files):
    code, out = run_json("tpair", files["line3"], "--i", "v3", "--j", "v3")
    assert code == 0 and out["ok"] and out["result"]["flags"]["quotient_faithful"]
    code, out = run_json("tpair", files["line3"], "--i", "", "--j", "full")
    assert code == 1 and not out["ok"]
    assert out["result"]["flags"]["quotient_faithful"] is False
    code, out = run_json("tpair", files["line3"], "--i", "zz", "--j", "full")
    assert code == 2  # unknown label


def test_quotient(files):
    code, out = run_json("quotient", files["line3"], "--i", "v3")
    assert code == 0
    assert out["result"]["system"]["ring"]["basis"] == ["v1", "v2"]
    assert out["result"]["graph"]["vertices"] == ["v1", "v2"]
    assert [e["name"] for e in out["result"]["graph"]["edges"]] == ["e1"]
    assert any("not saturated" in d for d in out["diagnostics"])
    code, out = run_json("quotient", files["a2"], "--i", "u")
    assert code == 1 and "NotInvariant" in out["diagnostics"][0]


def test_compare(files):
    for name in ("a2", "3v2c"):
        code, out = run_json("compare", files[name], "--words", "12", "--seed", "5")
        assert code == 0 and out["ok"]
        assert out["result"]["disagreements"] == []
    code, out = run_json("compare", files["perm3"])
    assert code == 2  # needs a graph


def test_gauge_split(files):
    code, out = run_json("gauge-split", files["a2"], "2 x(e) + p(v) - 3 y(e)")
    assert code == 0 and out["result"]["consistent"]
    assert out["result"]["degrees"] == [-1, 0, 1]
    assert out["result"]["components"]["1"] == "2 Q:e"
    assert out["result"]["components"]["-1"] == "-3 P:e"
    code, out = run_json("gauge-split", files["a2"], "p(u) - p(u)")
    assert code == 0 and out["result"]["degrees"] == []


def test_usage_errors(files):
    code, out = run_json("validate", "/nonexistent/file.json")
    assert code == 2
    code, out = run_json("eq", files["a2"], "p(u) +", "p(v)")
    assert code == 2 and "column" in out["diagnostics"][0]
    code, out = run_json("nf", files["a2"], "x(zz)")
    assert code == 2 and "unknown edge" in out["diagnostics"][0]
    code, body = cli.run(["frobnicate", files["a2"]])
    assert code == 2


def test_outputs_deterministic(files):
    a = cli.run(["lattice", files["3v2c"]])
    b = cli.run(["lattice", files["3v2c"]])
    assert a == b
    a = cli.run(["jmax", files["line3"]])
    b = cli.run(["jmax", files["line3"]])
    assert a == b


def test_table_format(files):
    code, body = cli.run(["jmax", files["a2"], "--format", "table"])
    assert code == 0
    assert "j_max" in body and '"u"' in body and not body.startswith("{")


def test_console_entry_point(files):
    proc = subprocess.run(
        ["cpr", "jmax", files["a2"]], capture_output=True, text=True
    )
    assert proc.returncode == 0
    out = json.loads(proc.stdout)
    assert out["result"]["j_max"] == ["u"]
    proc = subprocess.run(
        ["cpr", "eq", files["a2"], "p(u)", "x(e)*y(e)", "--ring", "toeplitz"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
