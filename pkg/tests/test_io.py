import csv
import io
import json

import pytest

from magdisk.io import CSV_COLUMNS, EmitError, ScenarioFileError, emit, parse_scenario, parse_scenario_text, render
from magdisk.model import RC, PowerLawBoundaryField, TabulatedField, TabulatedPotential
from magdisk.runner import run_verify

MINIMAL = """\
[disk]
r0 = 1.0

[field]
kind = "constant"
B0 = 2.0

[potential]
kind = "zero"

[params]
epsilon = 0.5
"""


def test_minimal_file(tmp_path):
    path = tmp_path / "s.toml"
    path.write_text(MINIMAL)
    sc = parse_scenario(path)
    assert sc.regime == RC and sc.field.B0 == 2.0 and sc.params.epsilon == 0.5
    assert sc.N == 1000  # numerics section is optional


def test_epsilon_hypothesis_has_location():
    text = MINIMAL.replace("epsilon = 0.5", "epsilon = 0.9")
    with pytest.raises(ScenarioFileError) as info:
        parse_scenario_text(text, "s.toml")
    msg = str(info.value)
    assert "0 < ε ≤ 3/4" in msg and "s.toml:12:1" in msg


def test_remark3_mode_accepts_large_epsilon():
    text = MINIMAL.replace("epsilon = 0.5", "epsilon = 0.9\nremark3_mode = true")
    assert parse_scenario_text(text).params.remark3_mode


def test_duplicate_key_reports_both_lines():
    text = MINIMAL.replace("B0 = 2.0", "B0 = 2.0\nB0 = 3.0")
    with pytest.raises(ScenarioFileError, match=r"line 7.*duplicate key 'B0'.*first defined on line 6"):
        parse_scenario_text(text)


def test_duplicate_section():
    with pytest.raises(ScenarioFileError, match="duplicate section"):
        parse_scenario_text(MINIMAL + "\n[disk]\nr0 = 2.0\n")


def test_unknown_key_and_section():
    with pytest.raises(ScenarioFileError) as info:
        parse_scenario_text(MINIMAL.replace("epsilon = 0.5", "epsilon = 0.5\nepsilom = 0.4") + "[extra]\nx = 1\n", "f")
    msgs = info.value.errors
    assert any("unknown section [extra]" in m for m in msgs)
    with pytest.raises(ScenarioFileError, match=r"f:13:1: unknown key 'epsilom'"):
        parse_scenario_text(MINIMAL.replace("epsilon = 0.5", "epsilon = 0.5\nepsilom = 0.4"), "f")


@pytest.mark.parametrize("drop,needle", [
    ("r0 = 1.0\n", "missing required key 'r0'"),
    ('kind = "constant"\n', "missing required key 'kind' in [field]"),
    ("epsilon = 0.5\n", "missing required key 'epsilon'"),
])
def test_no_physical_defaults(drop, needle):
    with pytest.raises(ScenarioFileError) as info:
        parse_scenario_text(MINIMAL.replace(drop, ""))
    assert needle in str(info.value)


def test_missing_section():
    with pytest.raises(ScenarioFileError, match=r"missing section \[potential\]"):
        parse_scenario_text(MINIMAL.replace('[potential]\nkind = "zero"\n', ""))


def test_type_mismatch():
    with pytest.raises(ScenarioFileError, match="'r0' must be a number"):
        parse_scenario_text(MINIMAL.replace("r0 = 1.0", 'r0 = "one"'))
    with pytest.raises(ScenarioFileError, match="'N' must be an integer"):
        parse_scenario_text(MINIMAL + "\n[numerics]\nN = 1.5\n")
    with pytest.raises(ScenarioFileError, match="'remark3_mode' must be true or false"):
        parse_scenario_text(MINIMAL.replace("epsilon = 0.5", "epsilon = 0.5\nremark3_mode = 1"))


def test_toml_syntax_error():
    with pytest.raises(ScenarioFileError, match="line"):
        parse_scenario_text("[disk\nr0 = 1")


def test_profile_kinds():
    text = MINIMAL.replace('kind = "constant"\nB0 = 2.0', 'kind = "power_law_boundary"\nK = 10.0\nc = 1.0\nbeta = 0.5')
    sc = parse_scenario_text(text)
    assert sc.field == PowerLawBoundaryField(10.0, 1.0, 0.5, 1.0)
    text = MINIMAL.replace('kind = "constant"\nB0 = 2.0', 'kind = "tabulated"\ngrid = [0.0, 0.5,\n  1.0]\nvalues = [1, 2, 3]')
    text = text.replace('kind = "zero"', 'kind = "tabulated"\ngrid = [0.0, 1.0]\nvalues = [0.0, 4.0]')
    sc = parse_scenario_text(text)
    assert sc.field == TabulatedField((0.0, 0.5, 1.0), (1.0, 2.0, 3.0))
    assert sc.potential == TabulatedPotential((0.0, 1.0), (0.0, 4.0))
    with pytest.raises(ScenarioFileError, match="unknown field kind"):
        parse_scenario_text(MINIMAL.replace('kind = "constant"', 'kind = "dipole"'))
    with pytest.raises(ScenarioFileError, match="unknown key 'V0'"):
        parse_scenario_text(MINIMAL.replace('kind = "zero"', 'kind = "zero"\nV0 = 1.0'))


def test_negative_potential_is_located():
    with pytest.raises(ScenarioFileError, match=r":9:1: potential must be nonnegative"):
        parse_scenario_text(MINIMAL.replace('kind = "zero"', 'kind = "constant"\nV0 = -1.0'), "x")


def test_unreadable_path(tmp_path):
    with pytest.raises(ScenarioFileError, match="cannot read"):
        parse_scenario(tmp_path / "absent.toml")


@pytest.fixture(scope="module")
def record():
    sc = parse_scenario_text(MINIMAL.replace("epsilon = 0.5", "epsilon = 0.5\nlambda_shift = 20.0") +
                             "\n[numerics]\nN = 400\n")
    return run_verify(sc, spectra=None)


def test_csv_columns_and_json_round_trip(record):
    text = render([record], "csv")
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    data = json.loads(render([record], "json"))
    by_id = {b["inequality"]: b for b in data[0]["bounds"]}
    for row in rows:
        b = by_id[row["inequality"]]
        assert float(row["lhs"]) == b["lhs"] and float(row["rhs"]) == b["rhs"]
        assert float(row["tol"]) == b["tolerance"] and row["verdict"] == b["verdict"]


def test_table_sorted_six_digits(record):
    lines = render([record, record], "table").splitlines()[2:]
    names = [ln.split()[1] for ln in lines]
    assert names == sorted(names)
    lhs = lines[0].split()[6]
    assert len(lhs.replace(".", "").replace("-", "").lstrip("0")) <= 6


def test_emit_errors(record, tmp_path):
    with pytest.raises(EmitError):
        render([], "csv")
    empty = type(record)(**{**record.__dict__, "bounds": []})
    with pytest.raises(EmitError, match="no bound reports"):
        render([empty], "csv")
    with pytest.raises(EmitError, match="cannot write"):
        emit([record], "csv", tmp_path / "missing" / "out.csv")
    out = tmp_path / "r.json"
    emit([record], "json", out)
    assert json.loads(out.read_text())[0]["scenario_hash"] == record.scenario_hash
