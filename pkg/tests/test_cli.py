import os
import subprocess
import sys

from rtmixed.cli import CSV_HEADER, run_cli
from rtmixed.vtk import write_vtk
from rtmixed.mesh import build_unit_square_mesh


def write_config(path, **overrides):
    base = {
        "mode": "convergence",
        "example": "allen_cahn_2d",
        "r": "0",
        "M_list": "4, 8",
        "tau_rule": "coupled",
        "T": "1.0",
    }
    base.update(overrides)
    lines = ["[study]"] + [f"{k} = {v}" for k, v in base.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_convergence_run_writes_csv(tmp_path, capsys):
    cfg = write_config(tmp_path / "study.ini", output=str(tmp_path / "out.csv"))
    assert run_cli(["--config", str(cfg)]) == 0
    lines = (tmp_path / "out.csv").read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "4" and first[2] == "0"
    assert first[5] == "" and first[6] == ""  # orders empty on the first row
    second = lines[2].split(",")
    assert 0.8 < float(second[5]) < 1.3


def test_byte_identical_reruns(tmp_path):
    cfg = write_config(tmp_path / "study.ini")
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(["--config", str(cfg), "--out", str(out1)]) == 0
    assert run_cli(["--config", str(cfg), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_unsupported_degree_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "study.ini", r="3")
    assert run_cli(["--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "r=3" in err and "(2D, r=0)" in err


def test_config_errors_exit_2(tmp_path):
    assert run_cli(["--config", str(tmp_path / "missing.ini")]) == 2
    cfg = write_config(tmp_path / "bad_mode.ini", mode="turbo")
    assert run_cli(["--config", str(cfg)]) == 2
    cfg = write_config(tmp_path / "bad_mlist.ini", M_list="4, 6")
    assert run_cli(["--config", str(cfg)]) == 2
    cfg = write_config(tmp_path / "custom.ini", example="custom")
    assert run_cli(["--config", str(cfg)]) == 2
    cfg = write_config(tmp_path / "stab.ini", mode="stability")  # fixed tau required
    assert run_cli(["--config", str(cfg)]) == 2


def test_solve_mode_and_overrides(tmp_path):
    cfg = write_config(tmp_path / "study.ini", M_list="4, 8")
    out = tmp_path / "single.csv"
    assert run_cli(["--config", str(cfg), "--mode", "solve", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2  # solve mode runs the first resolution only


def test_stability_mode(tmp_path):
    cfg = write_config(
        tmp_path / "study.ini",
        mode="stability",
        r="1",
        M_list="4, 8",
        tau_rule="fixed",
        tau="0.1",
        output=str(tmp_path / "stab.csv"),
    )
    assert run_cli(["--config", str(cfg)]) == 0
    lines = (tmp_path / "stab.csv").read_text().splitlines()
    assert len(lines) == 3
    taus = [line.split(",")[1] for line in lines[1:]]
    assert all(t == "1.000000e-01" for t in taus)


def test_embedding_mode(tmp_path):
    cfg = write_config(
        tmp_path / "study.ini", mode="embedding", M_list="4, 8",
        output=str(tmp_path / "emb.csv"),
    )
    assert run_cli(["--config", str(cfg)]) == 0
    lines = (tmp_path / "emb.csv").read_text().splitlines()
    ratios = lines[1].split(",")[8:12]
    assert all(float(v) > 0 for v in ratios)


def test_threads_match_sequential(tmp_path):
    cfg = write_config(tmp_path / "study.ini")
    seq, par = tmp_path / "seq.csv", tmp_path / "par.csv"
    assert run_cli(["--config", str(cfg), "--out", str(seq), "--threads", "1"]) == 0
    assert run_cli(["--config", str(cfg), "--out", str(par), "--threads", "2"]) == 0
    assert seq.read_bytes() == par.read_bytes()


def test_console_entry_point(tmp_path):
    cfg = write_config(tmp_path / "study.ini", M_list="4", mode="solve",
                       output=str(tmp_path / "o.csv"))
    proc = subprocess.run(
        [sys.executable, "-m", "rtmixed.cli", "--config", str(cfg)],
        capture_output=True, text=True, cwd=tmp_path,
    )
    assert proc.returncode == 0
    assert (tmp_path / "o.csv").exists()


def test_vtk_snapshots(tmp_path):
    cfg = write_config(
        tmp_path / "study.ini", mode="solve", M_list="2",
        output=str(tmp_path / "o.csv"), vtk_stride="1",
    )
    assert run_cli(["--config", str(cfg)]) == 0
    snaps = sorted(tmp_path.glob("*.vtk"))
    assert len(snaps) == 3  # initial state plus two steps at M=2 (tau = 1/2)
    text = snaps[0].read_text()
    for section in ("POINTS", "CELLS", "CELL_TYPES", "CELL_DATA"):
        assert section in text


def test_vtk_mesh_export(tmp_path):
    mesh = build_unit_square_mesh(2)
    path = tmp_path / "mesh.vtk"
    write_vtk(mesh, path)
    text = path.read_text().splitlines()
    assert text[0].startswith("# vtk DataFile")
    assert f"POINTS {mesh.n_vertices} double" in text
    assert f"CELL_TYPES {mesh.n_cells}" in text
    # triangle cell type
    assert text[text.index(f"CELL_TYPES {mesh.n_cells}") + 1] == "5"
