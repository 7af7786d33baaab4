"""Recursive-descent parser from .wadl text to a SourceDocument.

Parsing is total: `parse_document` returns diagnostics instead of raising.
"""
from __future__ import annotations

import math
from typing import Callable, List, Optional, Tuple

from ..builtins import BUILTIN_NAMES
from ..expr import Abs, At, Binary, BoolLit, Call, Cond, Exists, Expr, Name, Num, Prev, Unary, VecLit
from .ast import (
    ActionSpec,
    AutomatonDecl,
    Diagnostic,
    FireSched,
    GridSpec,
    Inplace,
    InputSched,
    Instance,
    Law,
    Par,
    ParamDecl,
    Pos,
    PulseSpec,
    Rule,
    Scenario,
    SourceDocument,
    TypeDecl,
    TypeRef,
    VarDecl,
)
from .lexer import LexError, Token, tokenize

KINDS = ("input", "internal", "output")
SECTION_WORDS = {"world", "local", "actions", "transitions", "trajectories", "states", "end"}
COMPARISONS = {"<", "<=", ">", ">=", "==", "!=", "=", "in"}


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(message)
        self.line, self.col = line, col


class Parser:
    def __init__(self, text: str):
        self.toks: List[Token] = tokenize(text)
        self.i = 0

    # -- token helpers -------------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def is_op(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def is_word(self, *words: str) -> bool:
        return self.tok.kind == "ident" and self.tok.text in words

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", tok.line, tok.col)

    def expect_op(self, text: str, what: Optional[str] = None) -> Token:
        if not self.is_op(text):
            self.error(f"expected {what or repr(text)}")
        return self.advance()

    def expect_word(self, *words: str) -> Token:
        if not self.is_word(*words):
            self.error(f"expected {' or '.join(repr(w) for w in words)}")
        return self.advance()

    def ident(self, what: str = "a name") -> Token:
        if self.tok.kind != "ident":
            self.error(f"expected {what}")
        return self.advance()

    def number(self) -> float:
        neg = False
        if self.is_op("-"):
            self.advance()
            neg = True
        if self.is_word("inf"):
            self.advance()
            v = math.inf
        elif self.tok.kind == "number":
            v = float(self.advance().text)
        else:
            self.error("expected a number")
        return -v if neg else v

    def integer(self) -> int:
        if self.tok.kind != "number" or not self.tok.text.isdigit():
            self.error("expected a whole number")
        return int(self.advance().text)

    def pos(self, tok: Optional[Token] = None) -> Pos:
        tok = tok or self.tok
        return Pos(tok.line, tok.col)

    def delimited(self, open_: str, close: str, item: Callable, sep: str = ","):
        """Items between brackets; running out of input reports the opening bracket."""
        opener = self.expect_op(open_)
        items = []
        try:
            if not self.is_op(close):
                items.append(item())
                while self.is_op(sep):
                    self.advance()
                    items.append(item())
            self.expect_op(close)
        except ParseError:
            if self.tok.kind == "eof" or self.is_word(*SECTION_WORDS):
                raise ParseError(f"unclosed {open_!r}", opener.line, opener.col) from None
            raise
        return items

    # -- document ------------------------------------------------------------------
    def document(self, file: str, text: str) -> SourceDocument:
        types, automata, scenario = [], [], None
        while self.tok.kind != "eof":
            if self.is_word("type"):
                types.append(self.type_decl())
            elif self.is_word("worldautomaton"):
                automata.append(self.automaton())
            elif self.is_word("scenario"):
                if scenario is not None:
                    self.error("only one scenario block is allowed")
                scenario = self.scenario()
            else:
                self.error("expected 'type', 'worldautomaton' or 'scenario'")
        return SourceDocument(tuple(types), tuple(automata), scenario, file, text)

    def type_decl(self) -> TypeDecl:
        start = self.advance()
        name = self.ident("a type name").text
        self.expect_op("=")
        if self.is_op("{"):
            variants = [t.text for t in self.delimited("{", "}", lambda: self.ident("a variant"))]
            neutral = None
            if self.is_word("neutral"):
                self.advance()
                neutral = self.ident("the neutral variant").text
            return TypeDecl(name, tuple(variants), neutral, False, self.pos(start))
        base = self.ident("'Real' or an enumeration")
        if base.text not in ("Real", "ℝ"):
            self.error("only modular reals and enumerations can be declared", base)
        if not (self.is_word("mod") or self.is_op("|")):
            self.error("expected 'mod'")
        self.advance()
        mod_tok = self.tok
        factor = 1.0
        if self.tok.kind == "number":
            factor = float(self.advance().text)
            if self.is_op("*"):
                self.advance()
        self.expect_word("pi", "π")
        if factor != 2.0:
            raise ParseError("only reals modulo 2π are supported", mod_tok.line, mod_tok.col)
        return TypeDecl(name, (), None, True, self.pos(start))

    def type_ref(self) -> TypeRef:
        base = self.ident("a type")
        name = base.text
        if self.is_op("^"):
            self.advance()
            if self.tok.kind != "number":
                self.error("expected a dimension")
            name = f"{name}^{self.advance().text}"
        elif self.is_op("²"):
            self.advance()
            name = f"{name}^2"
        if name in ("ℝ", "ℝ^2"):
            name = name.replace("ℝ", "Real")
        return TypeRef(name)

    # -- automata ------------------------------------------------------------------
    def automaton(self) -> AutomatonDecl:
        start = self.advance()
        name = self.ident("an automaton name").text
        params: List[ParamDecl] = []
        if self.is_op("("):
            params = self.delimited("(", ")", self.param)
        variables, actions, rules, laws, states = [], [], [], [], None
        while not self.is_word("end"):
            if self.tok.kind == "eof":
                raise ParseError(f"worldautomaton {name} is not closed with 'end'", start.line, start.col)
            if self.is_word("world", "local"):
                variables.extend(self.var_block())
            elif self.is_word("actions"):
                actions.extend(self.action_block())
            elif self.is_word("transitions"):
                self.advance()
                while self.is_word(*KINDS):
                    rules.append(self.rule())
            elif self.is_word("trajectories"):
                self.advance()
                while self.tok.kind == "ident" and self.tok.text not in SECTION_WORDS:
                    laws.append(self.law())
            elif self.is_word("states"):
                self.advance()
                states = self.expr()
                if self.is_op(";"):
                    self.advance()
            else:
                self.error("expected a section ('world variables', 'local variables', 'actions', 'transitions', 'trajectories', 'states') or 'end'")
        self.advance()
        return AutomatonDecl(name, tuple(params), tuple(variables), tuple(actions), tuple(rules), tuple(laws), states, self.pos(start))

    def param(self) -> ParamDecl:
        tok = self.ident("a parameter name")
        self.expect_op(":")
        st = self.type_ref()
        default = None
        if self.is_op("="):
            self.advance()
            default = self.expr()
        return ParamDecl(tok.text, st, default, self.pos(tok))

    def level_clause(self) -> int:
        self.expect_word("LEVEL", "level", "Level")
        return self.integer()

    def var_block(self) -> List[VarDecl]:
        klass = self.advance().text
        self.expect_word("variables")
        level = self.level_clause()
        out = []
        while self.is_word(*KINDS):
            direction = self.advance().text
            while True:
                tok = self.ident("a variable name")
                self.expect_op(":")
                st = self.type_ref()
                init = None
                if self.is_op(":="):
                    self.advance()
                    init = self.expr()
                out.append(VarDecl(tok.text, level, klass, direction, st, init, self.pos(tok)))
                if not self.is_op(","):
                    break
                self.advance()
            if self.is_op(";"):
                self.advance()
        return out

    def action_block(self) -> List[ActionSpec]:
        self.advance()
        level = self.level_clause() if self.is_word("LEVEL", "level", "Level") else 0
        out = []
        while self.is_word(*KINDS):
            kind = self.advance().text
            while True:
                tok = self.ident("an action name")
                out.append(ActionSpec(tok.text, level, kind, self.pos(tok)))
                if not self.is_op(","):
                    break
                self.advance()
            if self.is_op(";"):
                self.advance()
        return out

    def rule(self) -> Rule:
        kind_tok = self.advance()
        name = self.ident("an action name").text
        level = None
        if self.is_op("@"):
            self.advance()
            level = self.integer()
        guard = None
        if self.is_word("pre"):
            self.advance()
            guard = self.expr()
        effects = []
        if self.is_word("eff"):
            self.advance()
            while self.tok.kind == "ident" and self.peek().kind == "op" and self.peek().text == "=":
                target = self.advance().text
                self.advance()
                effects.append((target, self.expr()))
                if self.is_op(";") or self.is_op(","):
                    self.advance()
                else:
                    break
        return Rule(kind_tok.text, name, level, guard, tuple(effects), self.pos(kind_tok))

    def law(self) -> Law:
        tok = self.ident("a variable name")
        level = None
        if self.is_op("@"):
            self.advance()
            level = self.integer()
        ode = False
        if self.is_op("'"):
            self.advance()
            ode = True
        at = None
        if self.is_op("("):
            args = [a for a in self.delimited("(", ")", self.expr) if a not in (Name("t"), Name("p"))]
            if len(args) > 1:
                self.error("a law target takes at most one position")
            if args:
                at = args[0]
        control = None
        if self.is_op("<="):
            if not ode:
                self.error("a rate bound needs a derivative on the left (x' <= ...)")
            self.advance()
            form = "bound"
            expr = self.expr()
            if self.is_word("control"):
                self.advance()
                control = self.expr()
        else:
            self.expect_op("=", "'=' or '<='")
            form = "ode" if ode else "algebraic"
            expr = self.expr()
        if self.is_op(";") or self.is_op("."):
            self.advance()
        return Law(tok.text, level, form, expr, control, at, self.pos(tok))

    # -- expressions ---------------------------------------------------------------
    def expr(self) -> Expr:
        cond = self.or_expr()
        if self.is_op("?"):
            self.advance()
            then = self.expr()
            self.expect_op(":", "':' of a conditional")
            other = self.expr()
            return Cond(cond, then, other)
        return cond

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.is_word("or"):
            self.advance()
            left = Binary("or", left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.not_expr()
        while self.is_word("and"):
            self.advance()
            left = Binary("and", left, self.not_expr())
        return left

    def not_expr(self) -> Expr:
        if self.is_word("not"):
            self.advance()
            return Unary("not", self.not_expr())
        return self.comparison()

    def comparison(self) -> Expr:
        left = self.additive()
        if (self.tok.kind == "op" and self.tok.text in COMPARISONS) or self.is_word("in"):
            op = self.advance().text
            op = "==" if op == "=" else op
            right = self.additive()
            left = Binary(op, left, right)
            if (self.tok.kind == "op" and self.tok.text in COMPARISONS) or self.is_word("in"):
                self.error("comparisons do not chain; add parentheses")
        return left

    def additive(self) -> Expr:
        left = self.term()
        while self.is_op("+") or self.is_op("-"):
            op = self.advance().text
            left = Binary(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.is_op("*") or self.is_op("/"):
            op = self.advance().text
            left = Binary(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.is_op("-"):
            self.advance()
            arg = self.unary()
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Unary("neg", arg)
        return self.primary()

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text))
        if self.is_op("("):
            opener = self.advance()
            e = self.expr()
            if not self.is_op(")"):
                if self.tok.kind == "eof" or self.is_word(*SECTION_WORDS):
                    raise ParseError("unclosed '('", opener.line, opener.col)
                self.error("expected ')'")
            self.advance()
            return e
        if self.is_op("["):
            items = self.delimited("[", "]", self.expr)
            if len(items) != 2:
                raise ParseError("vectors have exactly two components", tok.line, tok.col)
            return VecLit(items[0], items[1])
        if self.is_op("|"):
            self.advance()
            e = self.additive()
            self.expect_op("|", "closing '|'")
            return Abs(e)
        if tok.kind != "ident":
            self.error("expected an expression")
        word = tok.text
        if word in ("true", "false"):
            self.advance()
            return BoolLit(word == "true")
        if word == "inf":
            self.advance()
            return Num(math.inf)
        if word == "exists":
            self.advance()
            var = self.ident("a bound variable").text
            self.expect_word("in")
            region = self.primary()
            self.expect_word("st")
            return Exists(var, region, self.expr())
        if word in ("and", "or", "not", "in", "st") or word in SECTION_WORDS:
            self.error("expected an expression")
        self.advance()
        level = None
        if self.is_op("@"):
            self.advance()
            level = self.integer()
        if not self.is_op("("):
            return Name(word, level)
        if word == "prev":
            args = self.delimited("(", ")", self.expr)
            if len(args) != 1 or not isinstance(args[0], Name):
                raise ParseError("prev takes one variable", tok.line, tok.col)
            return Prev(args[0].name, args[0].level)
        if word in BUILTIN_NAMES and level is None:
            return Call(word, tuple(self.delimited("(", ")", self.expr)))
        # x(t, p) is the value of x here and now; any other position samples x there
        args = [a for a in self.delimited("(", ")", self.expr) if a not in (Name("t"), Name("p"))]
        if not args:
            return Name(word, level)
        if len(args) > 1:
            raise ParseError(f"{word} is sampled at one position", tok.line, tok.col)
        return At(word, args[0], level)

    # -- scenario ------------------------------------------------------------------
    def scenario(self) -> Scenario:
        start = self.advance()
        fields = dict(params=[], bindings=[], options=[], links=[], closes=[], inputs=[], fires=[])
        grid = dt = horizon = system = None
        pin = False
        while not self.is_word("end"):
            if self.tok.kind == "eof":
                raise ParseError("scenario is not closed with 'end'", start.line, start.col)
            word = self.ident("a scenario statement").text
            if word == "grid":
                grid = self.grid_spec()
            elif word == "dt":
                dt = self.number()
            elif word == "horizon":
                horizon = self.number()
            elif word == "param":
                name = self.ident("a parameter name").text
                self.expect_op("=")
                fields["params"].append((name, self.expr()))
            elif word == "bind":
                fn = self.ident("a function name").text
                self.expect_op("=")
                fields["bindings"].append((fn, self.ident("an alternative").text))
            elif word == "option":
                name = self.ident("an option name").text
                self.expect_op("=")
                fields["options"].append((name, self.number()))
            elif word == "system":
                system = self.sys_expr()
            elif word == "link":
                inp = self.ident("an input name").text
                self.expect_op("=")
                fields["links"].append((inp, self.ident("an output name").text))
            elif word == "close":
                name, level = self.leveled()
                self.expect_op("=")
                fields["closes"].append((name, level, self.expr()))
            elif word == "input":
                fields["inputs"].append(self.input_sched())
            elif word == "fire":
                tok = self.tok
                name, level = self.leveled()
                self.expect_word("at")
                times = [self.number()]
                while self.is_op(","):
                    self.advance()
                    times.append(self.number())
                fields["fires"].append(FireSched(name, level, tuple(times), self.pos(tok)))
            elif word == "pin":
                self.expect_word("neutral")
                pin = True
            else:
                raise ParseError(f"unknown scenario statement {word!r}", self.toks[self.i - 1].line, self.toks[self.i - 1].col)
            if self.is_op(";"):
                self.advance()
        self.advance()
        return Scenario(
            grid, dt, horizon, system=system, pin_neutral=pin, pos=self.pos(start),
            **{k: tuple(v) for k, v in fields.items()},
        )  # fmt: skip

    def leveled(self) -> Tuple[str, int]:
        name = self.ident("a variable name").text
        level = 0
        if self.is_op("@"):
            self.advance()
            level = self.integer()
        return name, level

    def grid_spec(self) -> GridSpec:
        xs = self.delimited("[", "]", self.number)
        self.expect_word("x")
        ys = self.delimited("[", "]", self.number)
        self.expect_word("cells")
        nx = self.integer()
        self.expect_word("x")
        ny = self.integer()
        if len(xs) != 2 or len(ys) != 2:
            self.error("grid bounds are [lo, hi] pairs")
        return GridSpec(xs[0], xs[1], ys[0], ys[1], nx, ny)

    def input_sched(self) -> InputSched:
        tok = self.tok
        name, level = self.leveled()
        default = None
        if self.is_word("default"):
            self.advance()
            default = self.expr()
        pulses = []
        while self.is_word("value", "ramp"):
            pulses.append(self.pulse())
        return InputSched(name, level, default, tuple(pulses), self.pos(tok))

    def pulse(self) -> PulseSpec:
        ramp = self.advance().text == "ramp"
        value = self.expr()
        offset = cells = region = start = until = None
        strict = False
        if ramp and self.is_word("offset"):
            self.advance()
            offset = self.expr()
        if self.is_word("at"):
            self.advance()
            self.expect_word("cells")
            cells = [self.cell()]
            while self.is_op(","):
                self.advance()
                cells.append(self.cell())
            cells = tuple(cells)
        elif self.is_word("in"):
            self.advance()
            self.expect_word("square")
            parts = self.delimited("(", ")", self.expr)
            if len(parts) != 3:
                self.error("square(center, size, angle) takes three arguments")
            region = tuple(parts)
        if self.is_word("from"):
            self.advance()
            start = self.number()
        if self.is_word("after"):
            self.advance()
            start = self.number()
            strict = True
        if self.is_word("until"):
            self.advance()
            until = self.number()
        return PulseSpec(value, ramp, offset, cells, region, start, until, strict)

    def cell(self) -> Tuple[int, int]:
        rc = self.delimited("(", ")", self.integer)
        if len(rc) != 2:
            self.error("cells are (row, col) pairs")
        return (rc[0], rc[1])

    def sys_expr(self):
        left = self.sys_inplace()
        while self.is_op("||"):
            op = self.advance()
            left = Par(left, self.sys_inplace(), self.pos(op))
        return left

    def sys_inplace(self):
        node = self.sys_atom()
        while self.is_op("["):
            op = self.advance()
            inner = self.sys_expr()
            self.expect_op("]")
            node = Inplace(node, inner, self.pos(op))
        return node

    def sys_atom(self):
        if self.is_op("("):
            opener = self.advance()
            node = self.sys_expr()
            if not self.is_op(")") and (self.tok.kind == "eof" or self.is_word(*SECTION_WORDS)):
                raise ParseError("unclosed '('", opener.line, opener.col)
            self.expect_op(")")
            return node
        tok = self.ident("an automaton name")
        args, kwargs, parens = [], [], False
        if self.is_op("("):
            parens = True

            def item():
                if self.tok.kind == "ident" and self.peek().kind == "op" and self.peek().text == "=":
                    key = self.advance().text
                    self.advance()
                    kwargs.append((key, self.expr()))
                    return None
                if kwargs:
                    self.error("positional arguments must come before named ones")
                args.append(self.expr())
                return None

            self.delimited("(", ")", item)
        suffix = None
        if self.is_word("as"):
            self.advance()
            if self.tok.kind not in ("ident", "number"):
                self.error("expected an instance suffix")
            suffix = self.advance().text
        return Instance(tok.text, tuple(args), tuple(kwargs), suffix, parens, self.pos(tok))


def parse_document(text: str, file: str = "<input>") -> Tuple[Optional[SourceDocument], List[Diagnostic]]:
    """(document, diagnostics); the document is None when there are errors."""
    try:
        return Parser(text).document(file, text), []
    except (ParseError, LexError) as exc:
        return None, [Diagnostic("error", str(exc), exc.line, exc.col, file)]
    except RecursionError:
        return None, [Diagnostic("error", "expression nested too deeply", 1, 1, file)]


class WadlError(ValueError):
    def __init__(self, diagnostics: List[Diagnostic]):
        super().__init__("\n".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


def parse(text: str, file: str = "<input>") -> SourceDocument:
    doc, diags = parse_document(text, file)
    if doc is None:
        raise WadlError(diags)
    return doc
