"""Instruction set shared by the compiled and the numpy kernels."""

CONST, SYM = 0, 1
NEG, SIN, COS, TAN, SINH, COSH, EXP, LOG, SQRT, ATAN = range(2, 12)
ADD, SUB, MUL, DIV, POW = range(12, 17)

OPCODE = {
    "neg": NEG, "sin": SIN, "cos": COS, "tan": TAN, "sinh": SINH, "cosh": COSH,
    "exp": EXP, "log": LOG, "sqrt": SQRT, "atan": ATAN,
    "add": ADD, "sub": SUB, "mul": MUL, "div": DIV, "pow": POW,
}

# domain error codes
OK = 0
E_DIV0, E_SQRT, E_LOG, E_POWNEG, E_POWZERO, E_NONFINITE = range(1, 7)

ERROR_TEXT = {
    E_DIV0: "division by zero",
    E_SQRT: "sqrt of a negative number",
    E_LOG: "log of a non-positive number",
    E_POWNEG: "negative base raised to a non-integer power",
    E_POWZERO: "zero raised to a negative power",
    E_NONFINITE: "non-finite result",
}
