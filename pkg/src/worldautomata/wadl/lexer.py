"""Tokenizer for .wadl sources. UTF-8 symbols and their ASCII spellings are both accepted."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

DOT_ABOVE = "̇"  # K̇ is read as K'

# unicode symbol -> canonical token text
SYMBOLS = {
    "¬": "not",
    "∧": "and",
    "∨": "or",
    "∃": "exists",
    "∈": "in",
    "≤": "<=",
    "≥": ">=",
    "≠": "!=",
    "‖": "||",
    "∞": "inf",
    "²": "²",
    "→": "->",
}

OPERATORS = (
    ":=", "<=", ">=", "==", "!=", "||", "->",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "<", ">",
    "+", "-", "*", "/", "?", "|", "@", "'", "^", ".",
)  # fmt: skip


@dataclass(frozen=True)
class Token:
    kind: str  # ident | number | op | eof
    text: str
    line: int
    col: int

    def at(self) -> str:
        return f"{self.line}:{self.col}"


class LexError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(message)
        self.line, self.col = line, col


def _ident_start(ch: str) -> bool:
    return ch == "_" or ch.isalpha()


def _ident_part(ch: str) -> bool:
    if ch in "²³":
        return False
    return ch == "_" or ch.isalnum() or ch == DOT_ABOVE or ("0" <= ch <= "9") or ch in "₀₁₂₃₄₅₆₇₈₉"


def tokenize(text: str) -> List[Token]:
    out: List[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r﻿":
            i, col = i + 1, col + 1
            continue
        if ch == "#" or text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if text.startswith("s.t.", i):
            out.append(Token("ident", "st", line, start_col))
            i, col = i + 4, col + 4
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            out.append(Token("number", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if _ident_start(ch):
            j = i + 1
            while j < n and _ident_part(text[j]):
                j += 1
            word = text[i:j]
            col += j - i
            i = j
            if word.endswith(DOT_ABOVE):
                out.append(Token("ident", word.rstrip(DOT_ABOVE), line, start_col))
                out.append(Token("op", "'", line, col - 1))
            else:
                out.append(Token("ident", word, line, start_col))
            continue
        if ch in SYMBOLS:
            canon = SYMBOLS[ch]
            kind = "ident" if canon.isalpha() else "op"
            out.append(Token(kind, canon, line, start_col))
            i, col = i + 1, col + 1
            continue
        for op in OPERATORS:
            if text.startswith(op, i):
                out.append(Token("op", op, line, start_col))
                i, col = i + len(op), col + len(op)
                break
        else:
            raise LexError(f"unexpected character {ch!r}", line, start_col)
    out.append(Token("eof", "", line, col))
    return out
