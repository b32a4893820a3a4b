"""Command line entry point: parsing, exit codes, dry runs, stats output."""

import json
import shutil
from pathlib import Path

import pytest

from kbqakit.cli import STAGE_COMMANDS, build_parser, main
from kbqakit.pipeline import STAGE_ORDER, load_config, run_stage

WORLD = Path(__file__).resolve().parent.parent / "fixtures" / "world"


def copy_world(into: Path) -> Path:
    root = into / "world"
    shutil.copytree(WORLD, root, ignore=shutil.ignore_patterns("out"))
    return root / "config.yaml"


@pytest.fixture(scope="module")
def assembled_config(tmp_path_factory) -> str:
    path = copy_world(tmp_path_factory.mktemp("cli"))
    config = load_config(path)
    for name in STAGE_ORDER:
        run_stage(config, name)
    return str(path)


# -- parser -------------------------------------------------------------------


def test_every_stage_is_a_subcommand():
    assert STAGE_COMMANDS == STAGE_ORDER
    parser = build_parser()
    for name in STAGE_COMMANDS:
        args = parser.parse_args([name, "-c", "x.yaml"])
        assert args.command == name
        assert args.config == "x.yaml"
        assert not args.force
        assert not args.dry_run


def test_serve_subcommand_defaults():
    args = build_parser().parse_args(["serve", "-c", "x.yaml"])
    assert (args.host, args.port, args.static) == ("127.0.0.1", 8137, None)


def test_stats_subcommand_parses():
    args = build_parser().parse_args(["stats", "--config", "x.yaml"])
    assert args.command == "stats"


def test_verbose_flag_is_global():
    args = build_parser().parse_args(["-v", "kg-import", "-c", "x.yaml"])
    assert args.verbose


def test_missing_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as err:
        build_parser().parse_args([])
    assert err.value.code == 2


# -- exit codes ---------------------------------------------------------------


def test_stage_command_success_prints_report(tmp_path, capsys):
    config = copy_world(tmp_path)
    assert main(["kg-import", "-c", str(config)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("[kg-import] in=132 out=132 (")
    assert "entities=52" in out


def test_dry_run_prints_plan_without_running(tmp_path, capsys):
    config = copy_world(tmp_path)
    assert main(["passages", "-c", str(config), "--dry-run"]) == 0
    out = capsys.readouterr().out
    assert out == "questions: run\npassages: run\n"
    assert not (config.parent / "out").exists()


def test_missing_config_is_a_validation_error(tmp_path, capsys):
    assert main(["kg-import", "-c", str(tmp_path / "nope.yaml")]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "not found" in err


def test_missing_upstream_names_the_stage_to_run(tmp_path, capsys):
    config = copy_world(tmp_path)
    assert main(["assemble", "-c", str(config)]) == 1
    err = capsys.readouterr().err
    assert "'verify-import'" in err
    assert "run it first" in err


def test_stage_crash_is_a_runtime_error(tmp_path, capsys):
    (tmp_path / "bad.tsv").write_text("only-one-column\n", encoding="utf-8")
    (tmp_path / "labels.tsv").write_text("", encoding="utf-8")
    config = tmp_path / "config.yaml"
    config.write_text(
        "output_dir: out\nkg:\n  triples: bad.tsv\n  labels: labels.tsv\n",
        encoding="utf-8",
    )
    assert main(["kg-import", "-c", str(config)]) == 2
    assert capsys.readouterr().err.startswith("failed:")


# -- stats --------------------------------------------------------------------


def test_stats_before_assemble_exits_1(tmp_path, capsys):
    config = copy_world(tmp_path)
    assert main(["stats", "-c", str(config)]) == 1
    assert "assemble" in capsys.readouterr().err


def test_stats_prints_summary_json(assembled_config, capsys):
    assert main(["stats", "-c", assembled_config]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["sizes"]["kbqa"] == {"train": 24, "test": 7, "total": 31}
    assert stats["unique_answer_entities"] == 26
    assert stats["natural"]["unique_answer_entities"] == 24


def test_rerun_reports_cache_hit(assembled_config, capsys):
    assert main(["assemble", "-c", assembled_config]) == 0
    out = capsys.readouterr().out
    assert "(cached)" in out
    assert "ir=47" in out
