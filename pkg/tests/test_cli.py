"""CLI verbs: outputs, exit codes, machine-readable errors, config precedence."""

from __future__ import annotations

import json

import numpy as np
import pytest

from verse.cli import main
from verse.tensor_io import (
    EmbeddingMatrix,
    PatchGrid,
    read_embeddings,
    write_embeddings,
    write_patch_grids,
)

from conftest import (
    grids_for_matrix,
    make_planted_corpus,
    write_metadata_csv,
    write_scores_csv,
)


@pytest.fixture(scope="module")
def corpus():
    return make_planted_corpus()


@pytest.fixture()
def corpus_files(corpus, tmp_path):
    emb = tmp_path / "val.vemb"
    meta = tmp_path / "meta.csv"
    scores = tmp_path / "scores.csv"
    write_embeddings(corpus.matrix, emb)
    write_metadata_csv(corpus.records, meta)
    write_scores_csv(corpus.records, scores)
    return {"emb": emb, "meta": meta, "scores": scores, "dir": tmp_path}


class TestPool:
    def test_trivial_mean(self, tmp_path):
        grid = PatchGrid(
            sample_id="img",
            values=np.tile(np.array([2.0, 4.0], dtype=np.float32), (2, 2, 1)),
        )
        src = tmp_path / "g.vpgr"
        out = tmp_path / "e.vemb"
        write_patch_grids([grid], src)
        assert main(["pool", "--in", str(src), "--out", str(out)]) == 0
        matrix = read_embeddings(out)
        assert matrix.ids == ("img",)
        assert matrix.data.tolist() == [[2.0, 4.0]]

    def test_bad_file_exits_2(self, tmp_path, capsys):
        src = tmp_path / "bad.vpgr"
        src.write_bytes(b"JUNKJUNKJUNK")
        out = tmp_path / "e.vemb"
        assert main(["pool", "--in", str(src), "--out", str(out)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "format"
        assert not out.exists()


class TestDiagnose:
    def test_four_cluster_fixture_suitable(self, corpus_files, capsys):
        report_path = corpus_files["dir"] / "report.json"
        code = main(
            ["diagnose", "--emb", str(corpus_files["emb"]), "--d", "2",
             "--seed", "1", "--out", str(report_path)]
        )
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["suitable"] is True
        assert report["k"] == 4
        assert 0 <= report["trustworthiness"] <= 1
        rendered = capsys.readouterr().out
        assert "res=✓" in rendered

    def test_rendered_row_two_decimals(self, capsys):
        from verse.pipeline import render_report_row

        row = render_report_row(
            {
                "trustworthiness": 0.96,
                "proximity": 0.98,
                "k": 7,
                "radius": {"mean": 0.30, "min": 0.21, "max": 0.47},
                "density": {"mean": 243.0, "min": 69.0, "max": 476.0},
                "silhouette": 0.63,
                "suitable": True,
            }
        )
        assert "trust=0.96" in row
        assert "prox=0.98" in row
        assert "k=7" in row
        assert "radius=0.30 [0.21–0.47]" in row
        assert "silh=0.63" in row


def run_chain(files, out_dir, seed="1"):
    out_dir.mkdir(exist_ok=True)
    space = out_dir / "space.json"
    analysis = out_dir / "analysis.json"
    session = out_dir / "session.json"
    assert main(["reduce", "--emb", str(files["emb"]), "--d", "2", "--out", str(space)]) == 0
    assert main(["cluster", "--in", str(space), "--seed", seed, "--out", str(analysis)]) == 0
    assert main(
        ["explain", "--in", str(analysis), "--meta", str(files["meta"]),
         "--scores", str(files["scores"]), "--out", str(session)]
    ) == 0
    return space, analysis, session


class TestPipelineChain:
    def test_chain_and_booster(self, corpus, corpus_files, tmp_path):
        _, _, session = run_chain(corpus_files, tmp_path / "run")
        doc = json.loads(session.read_text())
        assert doc["kind"] == "session"
        assert len(doc["flagged"]) == 1

        catalog = tmp_path / "catalog.csv"
        write_metadata_csv(corpus.catalog, catalog)
        boosters = tmp_path / "boosters.json"
        code = main(
            ["booster", "--session", str(session), "--catalog", str(catalog),
             "--top-n", "2", "--out", str(boosters)]
        )
        assert code == 0
        specs = json.loads(boosters.read_text())["specs"]
        assert len(specs) == 1
        assert specs[0]["matched_ids"] == corpus.catalog_match_ids

    def test_explain_rejects_missing_record(self, corpus_files, tmp_path, capsys):
        space, analysis, _ = run_chain(corpus_files, tmp_path / "run")
        broken_meta = tmp_path / "broken.csv"
        lines = corpus_files["meta"].read_text().splitlines()
        broken_meta.write_text("\n".join(lines[:-1]) + "\n")
        code = main(
            ["explain", "--in", str(analysis), "--meta", str(broken_meta),
             "--scores", str(corpus_files["scores"]), "--out", str(tmp_path / "s.json")]
        )
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] in ("join_mismatch", "unknown_score_id")


def make_sweep_fixture(tmp_path):
    """Two blobs; cluster of the first ten samples carries the flagged-region
    means used in the reference sweep comparison."""
    rng = np.random.default_rng(5)
    n_low, n_rest = 10, 30
    plane = np.vstack(
        [
            rng.normal(0.0, 0.4, size=(n_low, 2)),
            np.array([9.0, 9.0]) + rng.normal(0.0, 0.4, size=(n_rest, 2)),
        ]
    )
    basis, _ = np.linalg.qr(rng.normal(size=(16, 2)))
    data = plane @ basis.T
    ids = [f"v{i:02d}" for i in range(n_low + n_rest)]
    matrix = EmbeddingMatrix(ids=tuple(ids), data=data.astype(np.float32))

    emb = tmp_path / "sweep.vemb"
    write_embeddings(matrix, emb)
    meta = tmp_path / "sweep_meta.csv"
    meta.write_text(
        "sample_id,band\n" + "".join(
            f"{i},{'low' if int(i[1:]) < n_low else 'high'}\n" for i in ids
        )
    )

    base_rest = (40 * 0.6712 - 10 * 0.5989) / 30
    boost_rest = (40 * 0.7607 - 10 * 0.7828) / 30
    base = tmp_path / "base.csv"
    boost = tmp_path / "boost.csv"
    base.write_text(
        "sample_id,f1\n" + "".join(
            f"{i},{0.5989 if k < n_low else base_rest!r}\n" for k, i in enumerate(ids)
        )
    )
    boost.write_text(
        "sample_id,f1\n" + "".join(
            f"{i},{0.7828 if k < n_low else boost_rest!r}\n" for k, i in enumerate(ids)
        )
    )
    return {"emb": emb, "meta": meta, "scores": base, "base": base, "boost": boost}


class TestSweep:
    def test_reference_rendered_deltas(self, tmp_path):
        files = make_sweep_fixture(tmp_path)
        _, _, session = run_chain(files, tmp_path / "run")
        out = tmp_path / "sweep.json"
        code = main(
            ["sweep", "--session", str(session),
             "--runs", f"{files['base']},{files['boost']}",
             "--baseline", "base", "--out", str(out)]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["rendered_deltas"]["validation"]["boost"] == "+0.09"
        cluster_regions = [r for r in doc["regions"] if r != "validation"]
        assert len(cluster_regions) == 1
        assert doc["rendered_deltas"][cluster_regions[0]]["boost"] == "+0.18"
        assert len(doc["regions"][cluster_regions[0]]) == 10

    def test_unknown_baseline_exits_2(self, tmp_path, capsys):
        files = make_sweep_fixture(tmp_path)
        _, _, session = run_chain(files, tmp_path / "run")
        code = main(
            ["sweep", "--session", str(session), "--runs", str(files["base"]),
             "--baseline", "nope", "--out", str(tmp_path / "x.json")]
        )
        assert code == 2
        assert json.loads(capsys.readouterr().err)["error"] == "unknown_baseline"


class TestConfigPrecedence:
    def test_flags_beat_config_file_beat_defaults(self, corpus_files, tmp_path):
        config = tmp_path / "conf.json"
        config.write_text(json.dumps({"threshold": 0.9, "seed": 3}))

        with_file = tmp_path / "r1.json"
        assert main(
            ["diagnose", "--emb", str(corpus_files["emb"]),
             "--config", str(config), "--out", str(with_file)]
        ) == 0
        assert json.loads(with_file.read_text())["suitable"] is False  # 0.9 gate

        with_flag = tmp_path / "r2.json"
        assert main(
            ["diagnose", "--emb", str(corpus_files["emb"]), "--config", str(config),
             "--threshold", "0.2", "--out", str(with_flag)]
        ) == 0
        assert json.loads(with_flag.read_text())["suitable"] is True

    def test_env_seed_default(self, corpus_files, tmp_path, monkeypatch):
        monkeypatch.setenv("VERSE_SEED", "9")
        out = tmp_path / "r.json"
        assert main(["diagnose", "--emb", str(corpus_files["emb"]), "--out", str(out)]) == 0

    def test_unknown_config_key_exits_2(self, corpus_files, tmp_path, capsys):
        config = tmp_path / "conf.json"
        config.write_text(json.dumps({"not_a_knob": 1}))
        code = main(
            ["diagnose", "--emb", str(corpus_files["emb"]), "--config", str(config),
             "--out", str(tmp_path / "r.json")]
        )
        assert code == 2
        assert json.loads(capsys.readouterr().err)["error"] == "invalid_input"


class TestDeterminism:
    def test_diagnose_twice_byte_identical(self, corpus_files, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert main(
                ["diagnose", "--emb", str(corpus_files["emb"]), "--seed", "1",
                 "--out", str(out)]
            ) == 0
        assert a.read_bytes() == b.read_bytes()
