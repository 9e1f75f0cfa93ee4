"""The command line front end, driven in-process through main()."""

import pytest
from conftest import policy_page
from logicweb.cli import main
from logicweb.signatures import KeyStore, authenticate

SITE = "http://site.test/"

INDEX = """<HTML>
<BODY>
<A HREF="other.html">Other page</A>
<LW_CODE><!--
p(1).
p(2).
loop :- loop.
greet(X) :- member(X, [hi, bye]).
-->
</LW_CODE>
</BODY>
</HTML>
"""

PERM = ("valid_program(_, _).\n"
        "valid_systemCall(_).\n"
        "call_system(G) :- built_ins:call_builtin(G).\n")

NO_RM = ("valid_program(_, _).\n"
         'valid_systemCall(system(Cmd)) :- append("rm ", _, Cmd), !, fail.\n'
         "valid_systemCall(_).\n"
         "call_system(G) :- built_ins:call_builtin(G).\n")


@pytest.fixture
def site(tmp_path):
    d = tmp_path / "site"
    d.mkdir()
    (d / "index.html").write_text(INDEX, encoding="utf-8")
    (d / "perm.html").write_text(policy_page("Permissive", PERM),
                                 encoding="utf-8")
    (d / "norm.html").write_text(policy_page("No Removals", NO_RM),
                                 encoding="utf-8")
    registry = tmp_path / "registry"
    registry.write_text(f"default {SITE}perm.html\n", encoding="utf-8")
    return d, registry


def base(site):
    d, registry = site
    return ["--mount", f"{SITE}={d}", "--registry", str(registry), "--offline"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ---------------------------------------------------------------- query

def test_query_answers_and_exit_zero(site, capsys):
    code, out, err = run_cli(capsys, "query", SITE + "index.html", "p(X)",
                             *base(site))
    assert code == 0
    assert out.splitlines() == ["X = 1", "X = 2"]
    assert err == ""


def test_ground_query_prints_true(site, capsys):
    code, out, _ = run_cli(capsys, "query", SITE + "index.html", "p(1)",
                           *base(site))
    assert code == 0
    assert out.splitlines() == ["true"]


def test_multi_variable_bindings_on_one_line(site, capsys):
    code, out, _ = run_cli(capsys, "query", SITE + "index.html",
                           "p(X), greet(Y)", "--limit", "1", *base(site))
    assert code == 0
    assert out.splitlines() == ["X = 1, Y = hi"]


def test_no_answers_prints_nothing_exit_one(site, capsys):
    code, out, _ = run_cli(capsys, "query", SITE + "index.html", "p(9)",
                           *base(site))
    assert code == 1
    assert out == ""


def test_limit_truncates(site, capsys):
    code, out, _ = run_cli(capsys, "query", SITE + "index.html", "p(X)",
                           "--limit", "1", *base(site))
    assert code == 0
    assert out.splitlines() == ["X = 1"]


def test_guard_stop_exit_two(site, capsys):
    code, out, err = run_cli(capsys, "query", SITE + "index.html", "loop",
                             *base(site))
    assert code == 2
    assert err.strip() == "stopped: loop found"


def test_unknown_page_fails_finitely(site, capsys):
    code, out, _ = run_cli(capsys, "query", SITE + "absent.html", "true",
                           *base(site))
    assert code == 1
    assert out == ""


def test_no_security_skips_registry(site, capsys):
    d, _ = site
    code, out, _ = run_cli(capsys, "query", SITE + "index.html", "p(X)",
                           "--mount", f"{SITE}={d}", "--offline",
                           "--no-security")
    assert code == 0
    assert out.splitlines() == ["X = 1", "X = 2"]


def test_trace_appends_audit_lines(site, capsys):
    code, out, _ = run_cli(capsys, "trace", SITE + "index.html", "p(1)",
                           *base(site))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "true"
    assert any(" fetch " in ln and "| policies:" in ln for ln in lines[1:])
    assert any(" switch " in ln for ln in lines[1:])


# ---------------------------------------------------------------- errors

def test_missing_registry_is_a_usage_error(site, capsys):
    d, _ = site
    code, _, err = run_cli(capsys, "query", SITE + "index.html", "p(X)",
                           "--mount", f"{SITE}={d}", "--offline")
    assert code == 3
    assert "registry" in err


def test_bad_goal_is_a_usage_error(site, capsys):
    code, _, err = run_cli(capsys, "query", SITE + "index.html", "p(",
                           *base(site))
    assert code == 3
    assert err.startswith("error: bad goal")


def test_bad_mount_spec(site, capsys):
    _, registry = site
    code, _, err = run_cli(capsys, "query", SITE + "index.html", "p(X)",
                           "--mount", "nodir", "--registry", str(registry))
    assert code == 3
    assert "--mount" in err


def test_argparse_errors_exit_three(capsys):
    with pytest.raises(SystemExit) as info:
        main(["query", "--bogus-flag"])
    assert info.value.code == 3
    with pytest.raises(SystemExit) as info:
        main(["no-such-command"])
    assert info.value.code == 3


# ---------------------------------------------------------------- fetch

def test_fetch_prints_the_translated_program(site, capsys):
    code, out, _ = run_cli(capsys, "fetch", SITE + "index.html", *base(site))
    assert code == 0
    assert 'my_id(get, "http://site.test/index.html").' in out
    assert 'link("Other page", "http://site.test/other.html").' in out
    assert "p(1)." in out


def test_fetch_failure(site, capsys):
    code, _, err = run_cli(capsys, "fetch", SITE + "absent.html", *base(site))
    assert code == 1
    assert err.startswith("fetch failed")


# ---------------------------------------------------------------- policy-check

def test_policy_check_composes_policies(site, capsys):
    d, _ = site
    common = ["--mount", f"{SITE}={d}", "--offline", "--no-security"]
    code, out, _ = run_cli(capsys, "policy-check", SITE + "perm.html",
                           SITE + "norm.html",
                           "--call", 'system("ls -l")', *common)
    assert (code, out.strip()) == (0, "allow")
    code, out, _ = run_cli(capsys, "policy-check", SITE + "perm.html",
                           SITE + "norm.html",
                           "--call", 'system("rm -rf /")', *common)
    assert (code, out.strip()) == (1, "deny")
    # the permissive policy alone allows the same call
    code, out, _ = run_cli(capsys, "policy-check", SITE + "perm.html",
                           "--call", 'system("rm -rf /")', *common)
    assert (code, out.strip()) == (0, "allow")


def test_policy_check_program_ids(site, capsys):
    d, _ = site
    common = ["--mount", f"{SITE}={d}", "--offline", "--no-security"]
    code, out, _ = run_cli(capsys, "policy-check", SITE + "perm.html",
                           "--program", 'lw(get, "http://anywhere.example/")',
                           *common)
    assert (code, out.strip()) == (0, "allow")


# ---------------------------------------------------------------- store

def test_store_persists_between_invocations(site, capsys, tmp_path):
    sd = tmp_path / "cache"
    args = base(site) + ["--store-dir", str(sd)]
    run_cli(capsys, "query", SITE + "index.html", "p(1)", *args)

    code, out, _ = run_cli(capsys, "store-list", "--store-dir", str(sd))
    assert code == 0
    assert f'lw(get, "{SITE}index.html")' in out
    assert "policy=" in out

    code, out, _ = run_cli(capsys, "store-clear", "--store-dir", str(sd))
    assert code == 0
    assert "removed 1 cached program(s)" in out
    code, out, _ = run_cli(capsys, "store-list", "--store-dir", str(sd))
    assert out == ""


def test_store_dir_from_environment(site, capsys, tmp_path, monkeypatch):
    sd = tmp_path / "cache"
    run_cli(capsys, "query", SITE + "index.html", "p(1)",
            *base(site), "--store-dir", str(sd))
    monkeypatch.setenv("LW_STORE_DIR", str(sd))
    code, out, _ = run_cli(capsys, "store-list")
    assert code == 0
    assert "index.html" in out


def test_store_list_requires_a_directory(capsys, monkeypatch):
    monkeypatch.delenv("LW_STORE_DIR", raising=False)
    code, _, err = run_cli(capsys, "store-list")
    assert code == 3
    assert "--store-dir" in err


# ---------------------------------------------------------------- signing

def test_keygen_sign_authenticate_pipeline(site, capsys, tmp_path):
    key = tmp_path / "alice.key"
    ks = tmp_path / "keystore"
    page = tmp_path / "page.html"
    page.write_text("<html><LW_CODE>f(a).</LW_CODE></html>\n", encoding="utf-8")
    out_page = tmp_path / "page.lwpgp.html"

    code, out, _ = run_cli(capsys, "keygen", "alice",
                           "--key-out", str(key), "--keystore", str(ks))
    assert code == 0
    assert "alice" in out
    assert key.is_file() and ks.is_file()

    code, _, err = run_cli(capsys, "sign", str(page), "--key", str(key),
                           "--signer", "alice", "--out", str(out_page))
    assert code == 0
    assert err == ""
    signed = out_page.read_text(encoding="utf-8")
    assert authenticate(signed, KeyStore.load(ks)) == "alice"


def test_sign_to_stdout_and_suffix_warning(site, capsys, tmp_path):
    key = tmp_path / "k.key"
    ks = tmp_path / "keystore"
    page = tmp_path / "page.html"
    page.write_text("<html></html>\n", encoding="utf-8")
    run_cli(capsys, "keygen", "bob", "--key-out", str(key),
            "--keystore", str(ks))

    code, out, _ = run_cli(capsys, "sign", str(page), "--key", str(key),
                           "--signer", "bob")
    assert code == 0
    assert authenticate(out, KeyStore.load(ks)) == "bob"

    badname = tmp_path / "still-plain.html"
    code, _, err = run_cli(capsys, "sign", str(page), "--key", str(key),
                           "--signer", "bob", "--out", str(badname))
    assert code == 0
    assert "not be treated as signed" in err


def test_keygen_appends_to_existing_keystore(capsys, tmp_path):
    ks = tmp_path / "keystore"
    run_cli(capsys, "keygen", "alice", "--key-out", str(tmp_path / "a.key"),
            "--keystore", str(ks))
    run_cli(capsys, "keygen", "bob", "--key-out", str(tmp_path / "b.key"),
            "--keystore", str(ks))
    store = KeyStore.load(ks)
    assert set(store.keys) == {"alice", "bob"}
