import io

import pandas as pd

from src.main import main


def _csv(text):
    return pd.read_csv(io.StringIO(text))


def test_footprint_to_stdout(capsys):
    assert main(["footprint", "--distances", "3,5", "--k", "4", "--n-logical", "8"]) == 0
    frame = _csv(capsys.readouterr().out)
    assert frame["qubits_per_patch"].tolist() == [17, 49]
    assert frame["groups_needed"].tolist() == [2, 2]


def test_bench_gen_then_route_program(tmp_path, capsys):
    program = tmp_path / "ghz.txt"
    assert main(["bench-gen", "--bench", "ghz:6", "--out", str(program)]) == 0
    assert program.read_text(encoding="utf-8").startswith("# qubits 6")

    out = tmp_path / "route.csv"
    trace = tmp_path / "trace.tsv"
    code = main(["route", "--program", str(program), "--mode", "ils", "--mode", "move",
                 "--k", "4", "--d", "3", "--out", str(out), "--trace", str(trace)])
    assert code == 0
    frame = pd.read_csv(out)
    assert frame["mode"].tolist() == ["interleaved_ls", "movement"]
    assert (frame["total_us"] > 0).all()
    assert trace.read_text(encoding="utf-8").count("CNOT") == 5


def test_route_all_layouts(capsys):
    assert main(["route", "--bench", "qft:4", "--layout", "all", "--k", "4", "--d", "3",
                 "--epsilon", "0.001"]) == 0
    frame = _csv(capsys.readouterr().out)
    assert len(frame) == 2 * 4
    assert set(frame["layout"]) == {"compact", "fast"}


def test_sweep_command(capsys):
    assert main(["sweep", "--axis", "movement_speed", "--grid", "0.5,5", "--bench", "ghz:4",
                 "--k", "4", "--d", "3"]) == 0
    frame = _csv(capsys.readouterr().out)
    assert frame["speed_um_per_us"].tolist() == [0.5, 0.5, 5.0, 5.0]


def test_layout_dump(tmp_path):
    out = tmp_path / "layout.csv"
    assert main(["layout-dump", "--k", "4", "--d", "3", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert len(frame) == 4 * (9 + 8)
    assert set(frame["species"]) == {"data", "ancilla"}


def test_default_radii_fit_the_largest_group(capsys):
    assert main(["layout-dump", "--k", "16", "--d", "3"]) == 0
    frame = _csv(capsys.readouterr().out)
    assert len(frame) == 16 * (9 + 8)


def test_infeasible_layout_exits_with_one(tmp_path):
    config = tmp_path / "short.cfg"
    config.write_text("r_ancilla_data_um = 20\n", encoding="utf-8")
    assert main(["layout-dump", "--k", "16", "--d", "3", "--config", str(config)]) == 1


def test_cnot_compare_noiseless(tmp_path, capsys):
    circuit = tmp_path / "cnot.txt"
    assert main(["cnot-compare", "--modes", "transversal", "--distances", "3",
                 "--error-rates", "0", "--shots", "50", "--dump-circuit", str(circuit)]) == 0
    frame = _csv(capsys.readouterr().out)
    assert frame["errors"].tolist() == [0]
    assert "DETECTOR" in circuit.read_text(encoding="utf-8")


def test_results_database(tmp_path, capsys):
    db = tmp_path / "runs.db"
    assert main(["footprint", "--distances", "3", "--db", str(db)]) == 0
    capsys.readouterr()
    assert main(["runs", "--db", str(db)]) == 0
    listing = _csv(capsys.readouterr().out)
    assert listing["command"].tolist() == ["footprint"]
    run_id = int(listing["id"][0])
    assert main(["runs", "--db", str(db), "--run", str(run_id)]) == 0
    rows = _csv(capsys.readouterr().out)
    assert rows["qubits_per_patch"].tolist() == [17]


def test_usage_errors():
    assert main([]) == 2
    assert main(["teleport"]) == 2
    assert main(["route", "--mode", "warp", "--d", "3"]) == 2
    assert main(["bench-gen", "--bench", "shor:5"]) == 2
    assert main(["footprint", "--distances", "three"]) == 2
    assert main(["runs"]) == 2


def test_invalid_configuration(tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("p_2q = 2.0\n", encoding="utf-8")
    assert main(["footprint", "--config", str(config)]) == 1
