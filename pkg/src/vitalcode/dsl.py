"""Straight-line arithmetic DSL: parser, three-address IR, interpreter.

Grammar (UTF-8 text, `#` comments to end of line):

    program   : stmt*
    stmt      : "input" ID ";"
              | "const" ID "=" INT ";"
              | "output" ID ";"
              | ID "=" expr ";"
    expr      : term (("+" | "-") term)*
    term      : factor ("*" factor)*
    factor    : INT | ID | "(" expr ")" | "-" factor

Assignments desugar to ADD/SUB/MUL/MOVE three-address instructions with
fresh temporaries.  The body is executed once per cycle; there are no
branches or loops and every destination is assigned exactly once.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

ADD = "ADD"
SUB = "SUB"
MUL = "MUL"
MOVE = "MOVE"

OPCODES = (ADD, SUB, MUL, MOVE)


class DslError(Exception):
    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


class ParseError(DslError):
    """Input does not match the grammar."""


class UndefinedVariableError(DslError):
    """Use of a variable with no preceding definition."""


class DuplicateDefinitionError(DslError):
    """Variable declared or assigned more than once."""


@dataclass(frozen=True)
class Instruction:
    opcode: str
    dest: str
    src1: str
    src2: str | None = None  # None only for MOVE


@dataclass
class ProgramIR:
    """Validated straight-line program in three-address form."""

    inputs: list[str] = field(default_factory=list)
    consts: dict[str, int] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    instructions: list[Instruction] = field(default_factory=list)

    def variables(self) -> list[str]:
        """All variables in canonical (definition) order."""
        names = list(self.inputs)
        names.extend(self.consts)
        names.extend(ins.dest for ins in self.instructions)
        return names


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>#[^\n]*)|(?P<int>\d+)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[-+*=();])"
)

_KEYWORDS = {"input", "const", "output"}


@dataclass(frozen=True)
class _Token:
    kind: str  # "int", "id", "kw", "punct", "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "id":
            tokens.append(_Token("kw" if lexeme in _KEYWORDS else "id",
                                 lexeme, line, col))
        elif kind in ("int", "punct"):
            tokens.append(_Token(kind, lexeme, line, col))
        nl = lexeme.count("\n")
        if nl:
            line += nl
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.ir = ProgramIR()
        self.defined: set[str] = set()
        self.temp_count = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind, text=None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, got {tok.text!r}",
                             tok.line, tok.col)
        return self.next()

    def parse(self) -> ProgramIR:
        while self.peek().kind != "eof":
            self.statement()
        for name in self.ir.outputs:
            if name not in self.defined:
                raise UndefinedVariableError(
                    f"output {name!r} is never defined")
        return self.ir

    def define(self, name: str, tok: _Token):
        if name in self.defined:
            raise DuplicateDefinitionError(
                f"variable {name!r} already defined", tok.line, tok.col)
        self.defined.add(name)

    def statement(self):
        tok = self.peek()
        if tok.kind == "kw":
            self.next()
            if tok.text == "input":
                name = self.expect("id")
                self.define(name.text, name)
                self.ir.inputs.append(name.text)
            elif tok.text == "const":
                name = self.expect("id")
                self.expect("punct", "=")
                value = self.int_literal()
                self.define(name.text, name)
                self.ir.consts[name.text] = value
            else:  # output
                name = self.expect("id")
                if name.text in self.ir.outputs:
                    raise DuplicateDefinitionError(
                        f"output {name.text!r} declared twice",
                        name.line, name.col)
                self.ir.outputs.append(name.text)
            self.expect("punct", ";")
        elif tok.kind == "id":
            self.next()
            self.expect("punct", "=")
            node = self.expr()
            self.expect("punct", ";")
            self.define(tok.text, tok)
            self.flatten(node, dest=tok.text)
        else:
            raise ParseError(f"expected statement, got {tok.text!r}",
                             tok.line, tok.col)

    def int_literal(self) -> int:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == "-":
            self.next()
            return -int(self.expect("int").text)
        return int(self.expect("int").text)

    # Expression AST nodes are ("op", opcode, left, right), ("var", name)
    # or ("lit", value).

    def expr(self):
        node = self.term()
        while self.peek().kind == "punct" and self.peek().text in "+-":
            op = ADD if self.next().text == "+" else SUB
            node = ("op", op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind == "punct" and self.peek().text == "*":
            self.next()
            node = ("op", MUL, node, self.factor())
        return node

    def factor(self):
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return ("lit", int(tok.text))
        if tok.kind == "id":
            self.next()
            if tok.text not in self.defined:
                raise UndefinedVariableError(
                    f"undefined variable {tok.text!r}", tok.line, tok.col)
            return ("var", tok.text)
        if tok.kind == "punct" and tok.text == "(":
            self.next()
            node = self.expr()
            self.expect("punct", ")")
            return node
        if tok.kind == "punct" and tok.text == "-":
            self.next()
            node = self.factor()
            if node[0] == "lit":
                return ("lit", -node[1])
            # Desugar unary minus on non-literals as 0 - x.
            return ("op", SUB, ("lit", 0), node)
        raise ParseError(f"expected expression, got {tok.text!r}",
                         tok.line, tok.col)

    def literal_var(self, value: int) -> str:
        name = f"$lit{value}"
        if name not in self.defined:
            self.defined.add(name)
            self.ir.consts[name] = value
        return name

    def new_temp(self) -> str:
        name = f"$t{self.temp_count}"
        self.temp_count += 1
        self.defined.add(name)
        return name

    def flatten(self, node, dest: str) -> None:
        """Emit three-address code computing `node` into `dest`."""
        if node[0] == "lit":
            self.ir.instructions.append(
                Instruction(MOVE, dest, self.literal_var(node[1])))
        elif node[0] == "var":
            self.ir.instructions.append(Instruction(MOVE, dest, node[1]))
        else:
            _, opcode, left, right = node
            self.ir.instructions.append(
                Instruction(opcode, dest, self.operand(left),
                            self.operand(right)))

    def operand(self, node) -> str:
        if node[0] == "lit":
            return self.literal_var(node[1])
        if node[0] == "var":
            return node[1]
        _, opcode, left, right = node
        temp = self.new_temp()
        self.ir.instructions.append(
            Instruction(opcode, temp, self.operand(left), self.operand(right)))
        return temp


def parse_program(text: str) -> ProgramIR:
    """Parse DSL source into validated three-address IR."""
    return _Parser(text).parse()


def interpret(ir: ProgramIR, inputs: dict[str, int]) -> dict[str, int]:
    """Plain (uncoded) reference interpretation of the IR.

    Returns the values of declared outputs.  Serves as the independent
    oracle for coded execution; kept free of any code-channel machinery.
    """
    env: dict[str, int] = {}
    for name in ir.inputs:
        if name not in inputs:
            raise KeyError(f"missing input {name!r}")
        env[name] = int(inputs[name])
    env.update(ir.consts)
    for ins in ir.instructions:
        if ins.opcode == ADD:
            env[ins.dest] = env[ins.src1] + env[ins.src2]
        elif ins.opcode == SUB:
            env[ins.dest] = env[ins.src1] - env[ins.src2]
        elif ins.opcode == MUL:
            env[ins.dest] = env[ins.src1] * env[ins.src2]
        else:
            env[ins.dest] = env[ins.src1]
    return {name: env[name] for name in ir.outputs}


def canonical_ir_bytes(ir: ProgramIR) -> bytes:
    """Deterministic flat encoding of the IR.

    Digested into PROM images; also embedded verbatim so the loader can
    reconstruct the program and re-verify the digest.
    """
    lines = []
    for name in ir.inputs:
        lines.append(f"input {name}")
    for name, value in ir.consts.items():
        lines.append(f"const {name} {value}")
    for name in ir.outputs:
        lines.append(f"output {name}")
    for ins in ir.instructions:
        if ins.opcode == MOVE:
            lines.append(f"MOVE {ins.dest} {ins.src1}")
        else:
            lines.append(f"{ins.opcode} {ins.dest} {ins.src1} {ins.src2}")
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def ir_from_canonical(data: bytes) -> ProgramIR:
    """Inverse of canonical_ir_bytes."""
    ir = ProgramIR()
    text = data.decode("utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts:
            raise ParseError("blank line in canonical IR", lineno, 1)
        head = parts[0]
        if head == "input" and len(parts) == 2:
            ir.inputs.append(parts[1])
        elif head == "const" and len(parts) == 3:
            ir.consts[parts[1]] = int(parts[2])
        elif head == "output" and len(parts) == 2:
            ir.outputs.append(parts[1])
        elif head == MOVE and len(parts) == 3:
            ir.instructions.append(Instruction(MOVE, parts[1], parts[2]))
        elif head in (ADD, SUB, MUL) and len(parts) == 4:
            ir.instructions.append(
                Instruction(head, parts[1], parts[2], parts[3]))
        else:
            raise ParseError(f"bad canonical IR line {line!r}", lineno, 1)
    return ir
