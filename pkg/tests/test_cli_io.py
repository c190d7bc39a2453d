import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from tailatlas.cli_io import main, parse_config, run
from tailatlas.errors import ConfigError
from tailatlas.reports import fraction_str
from oracles import random_primitive_matrix

SWAP = {
    "decompose": {},
    "base": {"cells": ["a", "b"], "transition": [["1/2", "1/2"], ["1/2", "1/2"]]},
    "fiber": {"kind": "finite", "size": 2},
    "action": {"maps": {"a": [0, 1], "b": [1, 0]}},
}


def cfg_text(**changes):
    d = json.loads(json.dumps(SWAP))
    for k, v in changes.items():
        if v is None:
            d.pop(k, None)
        else:
            d[k] = v
    return json.dumps(d)


def violations(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.violations


def test_minimal_swap_parses():
    cfg = parse_config(cfg_text())
    assert cfg.mode == "decompose" and cfg.base.cells == ("a", "b")
    assert cfg.canonical["base"]["cell_measure"] == ["1/2", "1/2"]
    assert cfg.canonical["numeric"] == {"tolerance": 1e-9, "max_power": 10000}


def test_row_sum_error_cites_the_path():
    bad = {"cells": ["a", "b"], "transition": [["1/2", "1/3"], ["1/2", "1/2"]]}
    v = violations(cfg_text(base=bad))
    assert (".base.transition[0]", "row sums to 5/6, expected 1") in v


def test_two_mode_blocks_are_ambiguous():
    v = violations(cfg_text(lorentz={"preset": "finite-horizon-square"}))
    assert "ambiguous mode" in v[0][1]


def test_no_mode_block():
    assert "missing mode" in violations(cfg_text(decompose=None))[0][1]


def test_unknown_keys_rejected_everywhere():
    assert violations(cfg_text(extra=1))
    assert violations(cfg_text(fiber={"kind": "finite", "size": 2, "colour": "red"}))
    v = violations(cfg_text(numeric={"tolerance": 1e-9, "typo": 3}))
    assert v[0][0] == ".numeric"


def test_schema_path_for_bad_types():
    v = violations(cfg_text(base={"cells": ["a", "b"], "transition": [["x", "1/2"], ["1/2", "1/2"]]}))
    assert v[0][0] == ".base.transition[0][0]"


def test_seed_is_unsigned_64_bit():
    assert violations(cfg_text(seed=2 ** 64))
    assert violations(cfg_text(seed=-1))
    assert parse_config(cfg_text(seed=2 ** 64 - 1)).seed == 2 ** 64 - 1


def test_semantic_action_errors():
    v = violations(cfg_text(action={"maps": {"a": [0, 0], "b": [1, 0]}}))
    assert (".action.maps.a", "not a bijection") in v
    v = violations(cfg_text(action={"maps": {"a": [0, 1]}}))
    assert any("no entry for cell 'b'" in m for _, m in v)


def test_lorentz_mode_refuses_symbolic_blocks():
    text = json.dumps({"lorentz": {"preset": "finite-horizon-square", "N": 4, "M": 10}, "base": SWAP["base"]})
    assert (".base", "not allowed in lorentz mode") in violations(text)


def _random_raw(seed):
    rng = random.Random(seed)
    n, k = rng.randint(1, 4), rng.randint(1, 4)
    rows = random_primitive_matrix(rng, n)
    cells = [f"c{i}" for i in range(n)]
    maps = {}
    for c in cells:
        p = list(range(k))
        rng.shuffle(p)
        maps[c] = p
    return {"decompose": {"relabel": rng.random() < 0.5},
            "base": {"cells": cells, "transition": [[fraction_str(x) for x in r] for r in rows]},
            "fiber": {"kind": "finite", "size": k}, "action": {"maps": maps},
            "seed": rng.randrange(2 ** 64)}


@given(st.integers(0, 10 ** 6))
@settings(max_examples=60, deadline=None)
def test_round_trip_is_identity_on_canonical_form(seed):
    cfg = parse_config(json.dumps(_random_raw(seed)))
    again = parse_config(cfg.serialize())
    assert again.canonical == cfg.canonical
    assert again.serialize() == cfg.serialize() and again.digest == cfg.digest


def test_equivalent_rationals_canonicalize_identically():
    a = parse_config(cfg_text(base={"cells": ["a", "b"], "transition": [["2/4", "1/2"], ["1/2", "3/6"]]}))
    b = parse_config(cfg_text())
    assert a.digest == b.digest


# -------------------------------------------------------------------- run

def test_swap_run_exits_zero_with_one_component():
    rep = run(parse_config(cfg_text()))
    assert rep.exit_code == 0
    assert len(rep.body["components"]) == 1
    assert rep.header["config_digest"] == parse_config(cfg_text()).digest


def test_corruption_hook_exits_two():
    text = cfg_text(action={"maps": {"a": [1, 0], "b": [1, 0]}}, checks={"inject_corruption": True})
    rep = run(parse_config(text))
    assert rep.exit_code == 2
    assert any(not c.passed for c in rep.checks)


def test_engine_errors_exit_one():
    text = json.dumps({"decompose": {}, "base": {"cells": ["a", "b"], "transition": [["1/2", "1/2"], ["1/2", "1/2"]]},
                       "fiber": {"kind": "lattice", "dim": 1, "window": 1},
                       "action": {"displacements": {"a": 2, "b": -2}}})
    rep = run(parse_config(text))
    assert rep.exit_code == 1 and rep.error


def test_k_mode_runs_all_checks():
    text = json.dumps({"k_decompose": {"depth": 3}, "base": SWAP["base"], "fiber": SWAP["fiber"],
                       "action": {"maps": {"a": [1, 0], "b": [1, 0]}}})
    rep = run(parse_config(text))
    names = {c.name for c in rep.checks}
    assert {"factor_commutation", "quotient_roundtrip", "filtration_inclusions",
            "exactness_certificates", "depth_independence"} <= names
    assert rep.exit_code == 0 and rep.body["quotient"]["depth"] == 3


def test_lattice_decompose_report():
    text = json.dumps({"decompose": {}, "base": SWAP["base"], "fiber": {"kind": "lattice", "dim": 1, "window": 6},
                       "action": {"displacements": {"a": 1, "b": -1}}})
    rep = run(parse_config(text))
    assert rep.exit_code == 0
    (comp,) = rep.body["components"]
    assert comp["period"] == 2 and comp["conservative"] and comp["N_E"] == "inf"


def test_cli_end_to_end(tmp_path, capsys):
    conf = tmp_path / "swap.json"
    conf.write_text(cfg_text())
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(["decompose", "--config", str(conf), "--out", str(out1)]) == 0
    assert main(["decompose", "--config", str(conf), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert main(["decompose", "--config", str(conf)]) == 0
    assert json.loads(capsys.readouterr().out)["exit_code"] == 0


def test_cli_input_errors(tmp_path, capsys):
    conf = tmp_path / "bad.json"
    conf.write_text(cfg_text(extra=True))
    assert main(["decompose", "--config", str(conf)]) == 1
    assert "extra" in capsys.readouterr().err
    conf.write_text(cfg_text())
    assert main(["lorentz", "--config", str(conf)]) == 1
    assert main(["decompose", "--config", str(tmp_path / "missing.json")]) == 1


def test_cli_seed_override_changes_the_digest(tmp_path):
    conf = tmp_path / "swap.json"
    conf.write_text(cfg_text())
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["decompose", "--config", str(conf), "--out", str(a), "--seed", "1"])
    main(["decompose", "--config", str(conf), "--out", str(b), "--seed", "2"])
    ha = json.loads(a.read_text())["header"]
    hb = json.loads(b.read_text())["header"]
    assert (ha["seed"], hb["seed"]) == (1, 2) and ha["config_digest"] != hb["config_digest"]


def test_lorentz_cli_writes_stats_and_csv(tmp_path):
    csv_path = tmp_path / "d.csv"
    conf = tmp_path / "l.json"
    conf.write_text(json.dumps({"lorentz": {"preset": "finite-horizon-square", "N": 16, "M": 50},
                                "seed": 3, "output": {"csv": str(csv_path)}}))
    out = tmp_path / "r.json"
    assert main(["lorentz", "--config", str(conf), "--out", str(out)]) == 0
    body = json.loads(out.read_text())["body"]
    assert body["trajectories"] == 16 and len(body["return_fraction"]) == 10
    assert csv_path.exists()


def test_lorentz_checkpoint_validation():
    text = json.dumps({"lorentz": {"preset": "finite-horizon-square", "N": 4, "M": 15}})
    assert (".lorentz.M", "must be a multiple of 10 unless checkpoints are given") in violations(text)
