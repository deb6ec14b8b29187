"""
A small Solidity lexer built on ply.

It only knows enough to find comments, string literals, identifiers, numbers
and punctuation with their line numbers. Everything the pairing and
fingerprinting code needs is derived from that token stream.
"""

from typing import List, NamedTuple

import ply.lex as lex
from ply.lex import TOKEN

IDENT = 'IDENT'
STRING = 'STRING'
NUMBER = 'NUMBER'
PUNCT = 'PUNCT'

tokens = (
    'COMMENT',
    STRING,
    IDENT,
    NUMBER,
    PUNCT,
)

# ply compiles every rule with re.VERBOSE; groups must stay non-capturing.
COMMENT_PATTERN = r'//[^\n]*|/\*[\s\S]*?(?:\*/|\Z)'
STRING_PATTERN = r'"(?:\\.|[^"\\\n])*"|\'(?:\\.|[^\'\\\n])*\''
IDENT_PATTERN = r'[A-Za-z_$][A-Za-z0-9_$]*'
NUMBER_PATTERN = r'0[xX][0-9a-fA-F_]+|\d[\d_]*(?:\.\d[\d_]*)?(?:[eE]-?\d+)?|\.\d[\d_]*'
PUNCT_PATTERN = r'=>|==|!=|<=|>=|&&|\|\||\+\+|--|<<=?|>>=?|\*\*|[-+*/%&|^!~]=?|.'

t_ignore = ' \t\r\f\v'


# Function rules are tried in definition order.
@TOKEN(COMMENT_PATTERN)
def t_COMMENT(t):
    t.lexer.lineno += t.value.count('\n')


@TOKEN(STRING_PATTERN)
def t_STRING(t):
    return t


@TOKEN(IDENT_PATTERN)
def t_IDENT(t):
    return t


@TOKEN(NUMBER_PATTERN)
def t_NUMBER(t):
    return t


def t_newline(t):
    r'\n+'
    t.lexer.lineno += len(t.value)


@TOKEN(PUNCT_PATTERN)
def t_PUNCT(t):
    return t


def t_error(t):
    # Unreachable while PUNCT ends with a catch-all; skip rather than fail.
    t.lexer.skip(1)


LEXER = lex.lex()


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    start: int
    end: int


def tokenize(text: str) -> List[Token]:
    """
    Split Solidity source into tokens, dropping comments and whitespace.
    """
    lexer = LEXER.clone()
    lexer.lineno = 1
    lexer.input(text)
    return [Token(tok.type, tok.value, tok.lineno, tok.lexpos, tok.lexpos + len(tok.value)) for tok in lexer]


def normalized_tokens(text: str) -> List[str]:
    """
    Token texts with string literal contents blanked, used for shingling.
    """
    result = []
    for token in tokenize(text):
        if token.kind == STRING:
            result.append(token.text[0] * 2)
        else:
            result.append(token.text)

    return result
