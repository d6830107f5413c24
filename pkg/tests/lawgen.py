"""Random instances of the reordering and interleaving laws."""

from __future__ import annotations

import random

from weakmem.refinement import Lead, Par
from weakmem.reorder import Architecture, Model, forward, reorderable
from weakmem.syntax import (
    Atomic,
    Binop,
    Choice,
    Fence,
    Glob,
    Guard,
    Lit,
    Prefix,
    Reg,
    SKIP,
    TruePrefix,
    Update,
    seq,
)

X, Y = Glob("x"), Glob("y")
R1, R2 = Reg("r1"), Reg("r2")


def random_action(rng: random.Random, arch: Architecture):
    kinds = ["full", "store", "ctrl"]
    if arch.model is Model.POWER:
        kinds += ["storegate", "loadgate", "eieio"]
    k = rng.random()
    g, r = rng.choice((X, Y)), rng.choice((R1, R2))
    if k < 0.25:
        return Update(g, rng.choice((Lit(1), Lit(2), r)))
    if k < 0.5:
        return Update(r, g)
    if k < 0.62:
        return Update(r, Binop("+", rng.choice((R1, R2)), Lit(1)))
    if k < 0.75:
        return Guard(Binop("=", r, Lit(rng.randint(0, 1))))
    if k < 0.82:
        return Guard(Binop("=", g, Lit(1)))
    if k < 0.93:
        return Fence(rng.choice(kinds))
    return Atomic((Update(r, g), Update(g, Lit(2))))


def random_command(rng: random.Random, arch: Architecture, size: int):
    acts = [random_action(rng, arch) for _ in range(size)]
    if size >= 2 and rng.random() < 0.2:
        cut = rng.randint(1, size - 1)
        return Choice(seq(acts[:cut]), seq(acts[cut:]))
    return seq(acts)


def law10(rng, arch):
    """alpha ; c  refines to  alpha . c"""
    a, c = random_action(rng, arch), random_command(rng, arch, rng.randint(0, 5))
    return Prefix(a, c), TruePrefix(a, c)


def law11(rng, arch):
    """alpha ; (beta . c)  refines to  fwd(alpha, beta) . (alpha ; c), when reorderable.

    Returns ``None`` when the side condition fails for the drawn instance.
    """
    a, b = random_action(rng, arch), random_action(rng, arch)
    c = random_command(rng, arch, rng.randint(0, 4))
    fb = forward(a, b)
    if arch.model is Model.SC or not reorderable(arch, a, fb):
        return None
    return Prefix(a, TruePrefix(b, c)), TruePrefix(fb, Prefix(a, c))


def law12(rng, arch):
    """(alpha . c) || d  refines to  alpha . (c || d)"""
    a = random_action(rng, arch)
    n = rng.randint(0, 5)
    c, d = random_command(rng, arch, rng.randint(0, n)), random_command(rng, arch, 5 - n)
    return Par(TruePrefix(a, c), d), Lead(a, Par(c, d))


def law13(rng, arch):
    """c refines to c' and d refines to d'  gives  c || d refines to c' || d'.

    Both premises come from law 10 instances, which are checked separately.
    """
    a, b = random_action(rng, arch), random_action(rng, arch)
    n = rng.randint(0, 4)
    c, d = random_command(rng, arch, rng.randint(0, n)), random_command(rng, arch, 4 - n)
    return Par(Prefix(a, c), Prefix(b, d)), Par(TruePrefix(a, c), TruePrefix(b, d)), ((Prefix(a, c), TruePrefix(a, c)), (Prefix(b, d), TruePrefix(b, d)))


def write_elim(rng, arch):
    """x := w ; x := v ; c  refines to  x := v ; c, with ``w`` a value.

    A register ``w`` would block later writes to that register in ``c``.
    """
    g = rng.choice((X, Y))
    w = Update(g, rng.choice((Lit(1), Lit(3))))
    v = Update(g, rng.choice((Lit(2), R2, Binop("+", R1, Lit(1)))))
    c = random_command(rng, arch, rng.randint(0, 4))
    return Prefix(w, Prefix(v, c)), Prefix(v, c)


__all__ = ["law10", "law11", "law12", "law13", "random_action", "random_command", "write_elim", "SKIP"]
