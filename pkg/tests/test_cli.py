from conftest import FIXTURES
from graphbook.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out.splitlines(), captured.err


def test_validate_fixture_ok(capsys):
    code, out, _ = run(capsys, "validate", FIXTURES / "latin-32.graph")
    assert code == 0
    assert out == []  # no findings at all


def test_validate_broken_graph(tmp_path, capsys):
    bad = tmp_path / "bad.graph"
    bad.write_text("graph t\nnode a | A | - | 30 | -\nnode b | B | - | 30 | -\nedge a -> b required\nedge b -> a required\n")
    code, out, _ = run(capsys, "validate", bad)
    assert code == 2
    assert any(line.startswith("error CYCLE") for line in out)


def test_closure_golden_target(capsys):
    code, out, _ = run(capsys, "closure", FIXTURES / "latin-32.graph", "--target", "prop_causale")
    assert code == 0
    assert out[0] == (
        "nodes alfabeto,casi,congiunzioni,coniugazioni,flessione,frase_minima,"
        "ind_perf_att,ind_pres_att,prop_causale,prop_principale,sogg_pred,verbo_sum"
    )


def test_order_deterministic(capsys):
    code1, out1, _ = run(capsys, "order", FIXTURES / "latin-32.graph", "--target", "prop_causale")
    code2, out2, _ = run(capsys, "order", FIXTURES / "latin-32.graph", "--target", "prop_causale")
    assert code1 == code2 == 0
    assert out1 == out2
    assert out1[0].startswith("order alfabeto,")


def test_count_diamond(tmp_path, capsys):
    d = tmp_path / "diamond.graph"
    d.write_text(
        "graph d\nnode a | A | - | 30 | -\nnode b | B | - | 30 | -\n"
        "node c | C | - | 30 | -\nnode d | D | - | 30 | -\n"
        "edge a -> b required\nedge a -> c required\nedge b -> d required\nedge c -> d required\n"
    )
    code, out, _ = run(capsys, "count", d, "--target", "d", "--cap", "100")
    assert code == 0
    assert out == ["count 2 exact"]
    code, out, _ = run(capsys, "enumerate", d, "--target", "d", "--cap", "10")
    assert out == ["linearization 0 a,b,c,d", "linearization 1 a,c,b,d", "truncated false"]


def test_rank_outputs_scores(capsys):
    code, out, _ = run(
        capsys, "rank", FIXTURES / "latin-32.graph", "--target", "frase_minima", "--cap", "50"
    )
    assert code == 0
    ranks = [l for l in out if l.startswith("rank ")]
    assert ranks
    scores = [float(l.split()[2]) for l in ranks]
    assert scores == sorted(scores, reverse=True)


def test_assemble_writes_plan_and_book(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        "assemble",
        FIXTURES / "latin-32.graph",
        "--target", "prop_causale",
        "--content", FIXTURES / "content-manifest.tsv",
        "--exercises", FIXTURES / "exercises.txt",
        "--out", tmp_path,
        "--epoch", "1700000000",
    )
    assert code == 0
    plan_line = next(l for l in out if l.startswith("plan "))
    book_line = next(l for l in out if l.startswith("book "))
    assert (tmp_path / plan_line.split()[2].split("/")[-1]).exists()
    assert (tmp_path / book_line.split()[2].split("/")[-1]).exists()


def test_review_reports_stubs(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        "review",
        FIXTURES / "latin-32.graph",
        "--progress", FIXTURES / "livia.progress",
        "--gaps", "prop_causale",
        "--content", FIXTURES / "content-manifest.tsv",
        "--out", tmp_path,
        "--epoch", "1700000000",
    )
    assert code == 0
    stubs = [l.split()[1] for l in out if l.startswith("stub ")]
    # mastered direct prerequisites of retained nodes become stubs; alfabeto,
    # whose dependents are all themselves mastered, drops out entirely
    assert stubs == ["flessione", "ind_pres_att", "verbo_sum"]


def test_review_mastered_gap_without_override_fails(tmp_path, capsys):
    code, _, err = run(
        capsys,
        "review",
        FIXTURES / "latin-32.graph",
        "--progress", FIXTURES / "livia.progress",
        "--gaps", "alfabeto",
        "--content", FIXTURES / "content-manifest.tsv",
        "--out", tmp_path,
    )
    assert code == 4
    assert "alfabeto" in err


def test_merge_and_sync(tmp_path, capsys):
    merged_path = tmp_path / "merged.graph"
    code, out, _ = run(
        capsys,
        "merge",
        FIXTURES / "latin-32.graph",
        FIXTURES / "italiano-5.graph",
        "--cross", FIXTURES / "cross-latin-italiano.txt",
        "--out", merged_path,
    )
    assert code == 0
    assert out[0].startswith("merged latin_italiano 37 39")

    orders = tmp_path / "orders.tsv"
    latin_order = ",".join(
        f"latin:{n}" for n in ["alfabeto", "flessione", "casi", "coniugazioni", "verbo_sum", "frase_minima"]
    )
    italiano_order = ",".join(
        f"italiano:{n}" for n in ["nome_genere", "analisi_logica", "frase_semplice", "periodo"]
    )
    orders.write_text(f"latin\t{latin_order}\nitaliano\t{italiano_order}\n")
    code, out, _ = run(capsys, "sync", merged_path, "--orders", orders)
    assert code == 0
    assert any(l.startswith("SATISFIABLE italiano:analisi_logica -> latin:frase_minima") for l in out)


def test_merge_cycle_exit_code(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        "merge",
        FIXTURES / "latin-32.graph",
        FIXTURES / "italiano-5.graph",
        "--cross", FIXTURES / "cross-cycle.txt",
        "--out", tmp_path / "never.graph",
    )
    assert code == 4
    assert out[0].startswith("error CYCLE")
    assert not (tmp_path / "never.graph").exists()


def test_tags_lookup_and_exercise_generation(capsys):
    code, out, _ = run(
        capsys,
        "tags",
        FIXTURES / "latin-32.graph",
        "--index", FIXTURES / "tags.tsv",
        "--tags", "causal_clause",
    )
    assert code == 0
    assert out[0] == "direct prop_causale"
    assert out[1].startswith("closure alfabeto,")

    code, out, _ = run(
        capsys,
        "tags",
        FIXTURES / "latin-32.graph",
        "--index", FIXTURES / "tags.tsv",
        "--analyzer-export", FIXTURES / "analyzer-export.tsv",
        "--make-exercises",
    )
    assert code == 0
    assert sum(1 for l in out if l.startswith("exercise ")) == 3
    # output is valid exercise-file input
    from graphbook.ingest import parse_exercises
    from graphbook.ingest import load_native

    g, _ = load_native(FIXTURES / "latin-32.graph")
    parsed = parse_exercises("\n".join(out) + "\n", g)
    assert len(parsed) == 3


def test_import_graphml_cli(tmp_path, capsys):
    out_path = tmp_path / "imported.graph"
    code, out, _ = run(
        capsys,
        "import-graphml",
        FIXTURES / "graphml/mixed-colors.graphml",
        "--ids-from-labels",
        "--discipline", "latin_demo",
        "--out", out_path,
    )
    assert code == 0
    assert out[0].startswith("imported latin_demo 4 4")
    assert any(l.startswith("warning SYNTHESIZED_GROUP") for l in out)
    from graphbook.ingest import load_native

    g, report = load_native(out_path)
    assert report.ok and len(g.alt_groups) == 1


def test_usage_error_exit_code(capsys):
    code, _, err = run(capsys, "closure", FIXTURES / "latin-32.graph")
    assert code == 1
    assert "usage" in err.lower()


def test_unknown_target_exit_code(capsys):
    code, _, err = run(capsys, "closure", FIXTURES / "latin-32.graph", "--target", "ghost")
    assert code == 2


def test_missing_file_exit_code(capsys):
    code, _, err = run(capsys, "validate", "no-such-file.graph")
    assert code == 3
