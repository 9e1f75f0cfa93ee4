"""Tokenizer, parser, and printer."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logicweb.syntax import (ParseError, parse_clause_terms, parse_term_text,
                             to_text, tokenize)
from logicweb.terms import Atom, Num, Str, Struct, Var


def parse(text):
    t, _ = parse_term_text(text)
    return t


def test_tokenize_skips_comments_and_whitespace():
    toks = tokenize("a % trailing words\n b")
    assert [t.kind for t in toks] == ["NAME", "NAME", "EOF"]


def test_tokenize_reports_position():
    with pytest.raises(ParseError) as err:
        tokenize("a\n  ^")
    assert err.value.line == 2
    assert err.value.column == 3


def test_parse_atom_and_struct():
    assert parse("foo") == Atom("foo")
    t = parse("foo(bar, 3)")
    assert t == Struct("foo", (Atom("bar"), Num(3)))


def test_parse_quoted_atom():
    assert parse("'hello world'") == Atom("hello world")
    assert parse("'/tmp/x.txt'") == Atom("/tmp/x.txt")


def test_parse_strings_with_escapes():
    assert parse(r'"a\nb"') == Str("a\nb")
    assert parse(r'"say \"hi\""') == Str('say "hi"')


def test_parse_numbers():
    assert parse("42") == Num(42)
    assert parse("-7") == Num(-7)
    assert parse("3.5") == Num(3.5)


def test_variables_share_within_one_term():
    t, varmap = parse_term_text("f(X, X, Y)")
    assert t.args[0] == t.args[1]
    assert t.args[0] != t.args[2]
    assert set(varmap) == {"X", "Y"}


def test_underscore_vars_are_all_distinct():
    t, varmap = parse_term_text("f(_, _)")
    assert t.args[0] != t.args[1]
    assert varmap == {}


def test_operator_precedence():
    t = parse("a :- b, c")
    assert t.functor == ":-"
    body = t.args[1]
    assert body == Struct(",", (Atom("b"), Atom("c")))

    t = parse("1 + 2 * 3")
    assert t == Struct("+", (Num(1), Struct("*", (Num(2), Num(3)))))

    # left associativity of '-'
    t = parse("1 - 2 - 3")
    assert t == Struct("-", (Struct("-", (Num(1), Num(2))), Num(3)))


def test_context_switch_operator():
    t = parse('lw(get, "http://x/") #> goal(X)')
    assert t.functor == "#>"
    assert t.args[0].functor == "lw"


def test_switch_binds_tighter_than_comma():
    t = parse("p #> q, r")
    assert t.functor == ","
    assert t.args[0] == Struct("#>", (Atom("p"), Atom("q")))


def test_current_context_marker():
    t = parse("(#)")
    assert t == Atom("(#)")
    t = parse("(lw(get, \"u\") + (#)) #> g")
    plus = t.args[0]
    assert plus.args[1] == Atom("(#)")


def test_reduce_markers():
    t = parse('(+)<>[a, b]')
    assert t.functor == "<>"
    assert t.args[0] == Atom("+")
    t = parse('(/)<>(e, [i])')
    assert t.args[0] == Atom("/")


def test_encapsulation_prefix():
    t = parse("@p")
    assert t == Struct("@", (Atom("p"),))
    t = parse("@p * @q")
    assert t.functor == "*"


def test_lists():
    t = parse("[a, B, 3]")
    items = []
    while isinstance(t, Struct):
        items.append(t.args[0])
        t = t.args[1]
    assert t == Atom("[]")
    assert len(items) == 3

    t = parse("[H|T]")
    assert isinstance(t.args[0], Var)
    assert isinstance(t.args[1], Var)


def test_parse_clause_terms_scopes_variables_per_clause():
    terms = parse_clause_terms("p(X).\nq(X).")
    assert terms[0].args[0] != terms[1].args[0]


def test_parse_clause_terms_requires_end_dot():
    with pytest.raises(ParseError):
        parse_clause_terms("p(a)")


def test_trailing_garbage_rejected():
    with pytest.raises(ParseError):
        parse_term_text("f(a) f(b)")


def test_unclosed_paren_rejected():
    with pytest.raises(ParseError):
        parse_term_text("f(a")


def test_cut_is_an_atom():
    t = parse("a :- !, b")
    body = t.args[1]
    assert body.args[0] == Atom("!")


def test_print_quotes_when_needed():
    assert to_text(Atom("foo")) == "foo"
    assert to_text(Atom("hello world")) == "'hello world'"
    assert to_text(Atom("[]")) == "[]"
    assert to_text(Str('a"b')) == '"a\\"b"'


def test_print_lists_in_sugar():
    t = parse("[a, b|T]")
    assert to_text(t).startswith("[a, b|")


def test_print_parenthesizes_by_precedence():
    t = parse("(1 + 2) * 3")
    assert to_text(t) == "(1 + 2) * 3"
    t = parse("1 + 2 * 3")
    assert to_text(t) == "1 + 2 * 3"


# ---------------------------------------------------------------- round trip

_ATOMS = st.sampled_from(["a", "b", "foo", "hello world", "x_1"])
_SIMPLE = st.one_of(
    _ATOMS.map(Atom),
    st.integers(min_value=-99, max_value=99).map(Num),
    st.text(alphabet="abc \n\"\\", max_size=6).map(Str),
    st.sampled_from(["X", "Y", "Zed"]).map(lambda n: Var(n, -ord(n[0]))),
)


def _trees(depth=2):
    if depth == 0:
        return _SIMPLE
    return st.one_of(
        _SIMPLE,
        st.tuples(st.sampled_from(["f", "g", "lw", "some_pred"]),
                  st.lists(_trees(depth - 1), min_size=1, max_size=3))
        .map(lambda fa: Struct(fa[0], tuple(fa[1]))),
    )


@given(_trees())
@settings(max_examples=200)
def test_print_parse_round_trip(t):
    """Printing then reparsing produces the same term up to variable ids."""
    text = to_text(t)
    back, _ = parse_term_text(text)
    from logicweb.terms import variant
    assert variant(t, back), f"{text!r} reparsed as {to_text(back)!r}"
