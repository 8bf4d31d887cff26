"""Tokenizer for the service-definition language."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, unique

from .errors import MonosliceError
from .values import Basic, Long


class LexError(MonosliceError):
    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")


@unique
class TokenKind(Enum):
    IDENT = "identifier"
    KEYWORD = "keyword"
    INT = "int literal"
    LONG = "long literal"
    DOUBLE = "double literal"
    STRING = "string literal"
    LBRACE = "{"
    RBRACE = "}"
    LPAREN = "("
    RPAREN = ")"
    LBRACKET = "["
    RBRACKET = "]"
    COLON = ":"
    COMMA = ","
    DOT = "."
    ELLIPSIS = "..."
    AT = "@"
    ASSIGN = "="
    EQ = "=="
    NEQ = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    PLUS = "+"
    MINUS = "-"
    STAR = "*"
    SLASH = "/"
    AND = "&&"
    OR = "||"
    BANG = "!"
    QUESTION = "?"
    EOF = "end of input"


# Reserved words. Everything else (location, protocol, interfaces, the
# execution modes, ...) is contextual and lexes as an identifier.
KEYWORDS = frozenset(
    {
        "type", "interface", "service",
        "inputPort", "outputPort", "execution", "main",
        "RequestResponse", "OneWay",
        "if", "else", "while", "throw",
        "true", "false",
        "void", "bool", "int", "long", "double", "string", "any",
    }
)

_PUNCT2 = {
    "==": TokenKind.EQ,
    "!=": TokenKind.NEQ,
    "<=": TokenKind.LE,
    ">=": TokenKind.GE,
    "&&": TokenKind.AND,
    "||": TokenKind.OR,
}

_PUNCT1 = {
    "{": TokenKind.LBRACE,
    "}": TokenKind.RBRACE,
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
    "[": TokenKind.LBRACKET,
    "]": TokenKind.RBRACKET,
    ":": TokenKind.COLON,
    ",": TokenKind.COMMA,
    ".": TokenKind.DOT,
    "@": TokenKind.AT,
    "=": TokenKind.ASSIGN,
    "<": TokenKind.LT,
    ">": TokenKind.GT,
    "+": TokenKind.PLUS,
    "-": TokenKind.MINUS,
    "*": TokenKind.STAR,
    "/": TokenKind.SLASH,
    "!": TokenKind.BANG,
    "?": TokenKind.QUESTION,
}

_ESCAPES = {'"': '"', "\\": "\\", "/": "/", "n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f"}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    line: int
    column: int
    value: Basic | None = field(default=None, compare=False)

    def __repr__(self) -> str:
        return f"Token({self.kind.name}, {self.lexeme!r}, {self.line}:{self.column})"


class _Scanner:
    def __init__(self, source: str):
        self.source = source
        self.pos = 0
        self.line = 1
        self.column = 1

    def error(self, message: str, line: int | None = None, column: int | None = None) -> LexError:
        return LexError(line or self.line, column or self.column, message)

    @property
    def eof(self) -> bool:
        return self.pos >= len(self.source)

    def peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.source[i] if i < len(self.source) else ""

    def advance(self) -> str:
        ch = self.source[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.column = 1
        else:
            self.column += 1
        return ch

    def skip_trivia(self) -> None:
        while not self.eof:
            ch = self.peek()
            if ch in " \t\r\n":
                self.advance()
            elif ch == "/" and self.peek(1) == "/":
                while not self.eof and self.peek() != "\n":
                    self.advance()
            elif ch == "/" and self.peek(1) == "*":
                line, column = self.line, self.column
                self.advance()
                self.advance()
                while True:
                    if self.eof:
                        raise self.error("unterminated block comment", line, column)
                    if self.peek() == "*" and self.peek(1) == "/":
                        self.advance()
                        self.advance()
                        break
                    self.advance()
            else:
                return

    def scan_word(self) -> Token:
        line, column = self.line, self.column
        start = self.pos
        while not self.eof and (self.peek().isalnum() or self.peek() == "_"):
            self.advance()
        word = self.source[start:self.pos]
        kind = TokenKind.KEYWORD if word in KEYWORDS else TokenKind.IDENT
        value: Basic | None = None
        if word == "true":
            value = True
        elif word == "false":
            value = False
        return Token(kind, word, line, column, value)

    def scan_number(self) -> Token:
        line, column = self.line, self.column
        start = self.pos
        while not self.eof and self.peek().isdigit():
            self.advance()
        is_double = False
        if self.peek() == "." and self.peek(1).isdigit():
            is_double = True
            self.advance()
            while not self.eof and self.peek().isdigit():
                self.advance()
        if self.peek() in ("e", "E"):
            probe = 1 if self.peek(1) not in ("+", "-") else 2
            if self.peek(probe).isdigit():  # otherwise the e starts an identifier
                is_double = True
                for _ in range(probe):
                    self.advance()
                while not self.eof and self.peek().isdigit():
                    self.advance()
        text = self.source[start:self.pos]
        if self.peek() == "L":
            if is_double:
                raise self.error("long suffix on a non-integer literal", line, column)
            self.advance()
            return Token(TokenKind.LONG, text + "L", line, column, Long(int(text)))
        if is_double:
            return Token(TokenKind.DOUBLE, text, line, column, float(text))
        return Token(TokenKind.INT, text, line, column, int(text))

    def scan_string(self) -> Token:
        line, column = self.line, self.column
        start = self.pos
        self.advance()  # opening quote
        out: list[str] = []
        while True:
            if self.eof or self.peek() == "\n":
                raise self.error("unterminated string literal", line, column)
            ch = self.advance()
            if ch == '"':
                break
            if ch == "\\":
                if self.eof:
                    raise self.error("unterminated string literal", line, column)
                esc = self.advance()
                if esc in _ESCAPES:
                    out.append(_ESCAPES[esc])
                elif esc == "u":
                    hexits = ""
                    for _ in range(4):
                        if self.eof or self.peek() not in "0123456789abcdefABCDEF":
                            raise self.error("invalid \\u escape", line, column)
                        hexits += self.advance()
                    code = int(hexits, 16)
                    if 0xD800 <= code <= 0xDFFF:  # not representable in UTF-8 text
                        raise self.error("surrogate \\u escape", line, column)
                    out.append(chr(code))
                else:
                    raise self.error(f"unknown escape \\{esc}", line, column)
            else:
                out.append(ch)
        text = "".join(out)
        return Token(TokenKind.STRING, self.source[start:self.pos], line, column, text)


def tokenize(source: str) -> list[Token]:
    """Tokenize source text. Comments and whitespace are dropped.

    Raises LexError with position on illegal characters or unterminated
    strings/comments.
    """
    scanner = _Scanner(source)
    tokens: list[Token] = []
    while True:
        scanner.skip_trivia()
        if scanner.eof:
            return tokens
        ch = scanner.peek()
        if ch.isalpha() or ch == "_":
            tokens.append(scanner.scan_word())
        elif ch.isdigit():
            tokens.append(scanner.scan_number())
        elif ch == '"':
            tokens.append(scanner.scan_string())
        else:
            if ch == "." and scanner.peek(1) == "." and scanner.peek(2) == ".":
                line, column = scanner.line, scanner.column
                scanner.advance()
                scanner.advance()
                scanner.advance()
                tokens.append(Token(TokenKind.ELLIPSIS, "...", line, column))
                continue
            two = ch + scanner.peek(1)
            if two in _PUNCT2:
                line, column = scanner.line, scanner.column
                scanner.advance()
                scanner.advance()
                tokens.append(Token(_PUNCT2[two], two, line, column))
            elif ch in _PUNCT1:
                line, column = scanner.line, scanner.column
                scanner.advance()
                tokens.append(Token(_PUNCT1[ch], ch, line, column))
            else:
                raise scanner.error(f"illegal character {ch!r}")
