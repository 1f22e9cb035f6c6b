"""Symbolic variational forms over several meshes.

Expressions form an immutable DAG.  Integrating an expression against a
``Measure`` gives a ``Form``; ``extract_blocks`` splits a form over mixed
spaces into its block subforms and ``validate`` reports malformed forms.
"""

import itertools
import numbers

import numpy as np

from .errors import (DimensionMismatchError, FormError, FormValidationError,
                     InvalidMeasureError)
from .space import MixedFunctionSpace


class ErrorCode:
    PLURAL_REQUIRED = "PLURAL_REQUIRED"
    MIXED_SPACE_REQUIRED = "MIXED_SPACE_REQUIRED"
    MEASURE_DOMAIN_MISMATCH = "MEASURE_DOMAIN_MISMATCH"
    NONLINEAR_ARGUMENT = "NONLINEAR_ARGUMENT"
    ARITY_MISMATCH = "ARITY_MISMATCH"
    CODIM_MEASURE = "CODIM_MEASURE"
    FACET_MEASURE_OFF_DIAGONAL = "FACET_MEASURE_OFF_DIAGONAL"
    UNSUPPORTED_CODIMENSION = "UNSUPPORTED_CODIMENSION"
    MALFORMED_TERM = "MALFORMED_TERM"


def as_expr(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (numbers.Number, np.ndarray, list, tuple)):
        return Constant(value)
    raise TypeError(f"cannot use {type(value).__name__} in a form expression")


def _is_scalar(e):
    return e.shape == ()


class Expr:
    shape = ()
    children = ()

    def __add__(self, other):
        return Sum(self, as_expr(other))

    def __radd__(self, other):
        return Sum(as_expr(other), self)

    def __sub__(self, other):
        return Sum(self, -as_expr(other))

    def __rsub__(self, other):
        return Sum(as_expr(other), -self)

    def __neg__(self):
        return Constant(-1.0) * self

    def __mul__(self, other):
        if isinstance(other, Measure):
            return NotImplemented
        return _multiply(self, as_expr(other))

    def __rmul__(self, other):
        return _multiply(as_expr(other), self)

    def __truediv__(self, other):
        if not isinstance(other, numbers.Number):
            raise TypeError("only division by numbers is supported")
        return Constant(1.0 / other) * self

    def __str__(self):
        return self.render()

    def render(self):
        raise NotImplementedError

    def gdim(self):
        for child in self.children:
            g = child.gdim()
            if g is not None:
                return g
        return None

    def traverse(self):
        """Pre-order walk over the DAG."""
        yield self
        for child in self.children:
            yield from child.traverse()

    def arguments(self):
        out = []
        for node in self.traverse():
            if isinstance(node, Argument) and node not in out:
                out.append(node)
        return out

    def has_arguments(self):
        return any(isinstance(n, Argument) for n in self.traverse())

    def rebuild(self, children):
        return self


def _multiply(a, b):
    if _is_scalar(a) and _is_scalar(b):
        return Product(a, b)
    if _is_scalar(a):
        return ComponentMul(a, b)
    if _is_scalar(b):
        return ComponentMul(b, a)
    raise DimensionMismatchError(
        f"cannot multiply shapes {a.shape} and {b.shape}; use inner()")


class Argument(Expr):
    """Test (number 0) or trial (number 1) function of one block of a mixed space."""

    def __init__(self, space, number, block=0, mixed_space=None):
        if number not in (0, 1):
            raise ValueError("argument number must be 0 (test) or 1 (trial)")
        self.space = space
        self.number = number
        self.block = block
        self.mixed_space = mixed_space
        self.shape = () if space.value_size == 1 else (space.value_size,)

    @property
    def mesh(self):
        return self.space.mesh

    def gdim(self):
        return self.space.mesh.gdim

    def __eq__(self, other):
        return (isinstance(other, Argument) and other.space is self.space
                and other.number == self.number and other.block == self.block
                and other.mixed_space is self.mixed_space)

    def __hash__(self):
        return hash((id(self.space), self.number, self.block))

    def render(self):
        return f"{'vu'[self.number]}{self.block}<{self.space.mesh.name}:P{self.space.degree}>"


class Coefficient(Expr):
    def __init__(self, function):
        self.function = function
        vs = function.space.value_size
        self.shape = () if vs == 1 else (vs,)

    @property
    def mesh(self):
        return self.function.space.mesh

    def gdim(self):
        return self.mesh.gdim

    def render(self):
        return self.function.name or "w"


class AnalyticCoefficient(Expr):
    """Closure ``fn(x)`` of physical points ``x`` with shape (n, gdim)."""

    def __init__(self, fn, shape=(), degree=2, name=None):
        self.fn = fn
        self.shape = tuple(shape)
        self.degree = degree
        self.name = name

    def render(self):
        return self.name or "f"


class Constant(Expr):
    def __init__(self, value):
        self.value = np.array(value, dtype=float)
        self.shape = self.value.shape

    def render(self):
        if self.shape == ():
            return repr(float(self.value))
        return "[" + ", ".join(repr(float(v)) for v in self.value.ravel()) + "]"


class SpatialCoordinate(Expr):
    def __init__(self, mesh):
        self.mesh = mesh
        self.shape = (mesh.gdim,)

    def gdim(self):
        return self.mesh.gdim

    def render(self):
        return "x"


class _Operator(Expr):
    def __init__(self, *children):
        self.children = tuple(children)

    def rebuild(self, children):
        return type(self)(*children)

    def render(self):
        inner = ", ".join(c.render() for c in self.children)
        return f"{type(self).__name__.lower()}({inner})"


class Grad(_Operator):
    def __init__(self, child):
        super().__init__(child)
        g = child.gdim()
        if g is None:
            raise DimensionMismatchError("cannot take the gradient of an expression without a mesh")
        self.shape = child.shape + (g,)


class Div(_Operator):
    def __init__(self, child):
        super().__init__(child)
        if len(child.shape) != 1 or child.shape[0] != child.gdim():
            raise DimensionMismatchError(f"div needs a vector with gdim components, got {child.shape}")
        self.shape = ()


class Inner(_Operator):
    def __init__(self, left, right):
        super().__init__(left, right)
        if left.shape != right.shape:
            raise DimensionMismatchError(f"inner of shapes {left.shape} and {right.shape}")
        self.shape = ()


class Product(_Operator):
    def __init__(self, left, right):
        super().__init__(left, right)
        if left.shape != () or right.shape != ():
            raise DimensionMismatchError("Product takes scalar operands")

    def render(self):
        return f"{self.children[0].render()}*{self.children[1].render()}"


class ComponentMul(_Operator):
    """Scalar times a vector (or tensor) valued expression."""

    def __init__(self, scalar, other):
        super().__init__(scalar, other)
        if scalar.shape != ():
            raise DimensionMismatchError("first operand of ComponentMul must be scalar")
        self.shape = other.shape

    def render(self):
        return f"{self.children[0].render()}*{self.children[1].render()}"


class Sum(_Operator):
    def __init__(self, left, right):
        super().__init__(left, right)
        if left.shape != right.shape:
            raise DimensionMismatchError(f"cannot add shapes {left.shape} and {right.shape}")
        self.shape = left.shape

    def render(self):
        return f"({self.children[0].render()} + {self.children[1].render()})"


def grad(e):
    return Grad(as_expr(e))


def div(e):
    return Div(as_expr(e))


def inner(a, b):
    a, b = as_expr(a), as_expr(b)
    if a.shape == () and b.shape == ():
        return Product(a, b)
    return Inner(a, b)


dot = inner


def mixed_arguments(space, number):
    if isinstance(space, MixedFunctionSpace):
        return [Argument(V, number, i, space) for i, V in enumerate(space)]
    return [Argument(space, number, 0, None)]


def _single_argument(space, number):
    if isinstance(space, MixedFunctionSpace):
        kind = ("TestFunctions", "TrialFunctions")[number]
        raise FormValidationError([FormError(
            "PLURAL_REQUIRED", f"use {kind} on a mixed function space")])
    return Argument(space, number)


def TestFunction(space):
    return _single_argument(space, 0)


def TrialFunction(space):
    return _single_argument(space, 1)


def TestFunctions(space):
    return mixed_arguments(space, 0)


def TrialFunctions(space):
    return mixed_arguments(space, 1)


_KINDS = {"dx": "cell", "cell": "cell", "ds": "exterior_facet", "exterior_facet": "exterior_facet"}


class Measure:
    """Integration over the cells (``dx``) or exterior facets (``ds``) of ``domain``."""

    def __init__(self, kind, domain, subdomain_data=None, tag=None, degree=None):
        if kind not in _KINDS:
            raise InvalidMeasureError(f"unknown measure kind {kind!r}")
        self.kind = _KINDS[kind]
        self.domain = domain
        self.subdomain_data = subdomain_data
        self.tag = tag
        self.degree = degree
        if tag is not None and subdomain_data is None:
            raise InvalidMeasureError("a tagged measure needs subdomain_data")
        if subdomain_data is not None:
            if subdomain_data.mesh is not domain:
                raise InvalidMeasureError("subdomain_data is defined on another mesh")
            if subdomain_data.dim != self.dim:
                raise InvalidMeasureError(
                    f"subdomain_data on dimension {subdomain_data.dim}, measure integrates "
                    f"over dimension {self.dim}")

    @property
    def dim(self):
        return self.domain.tdim - (self.kind == "exterior_facet")

    def __call__(self, tag=None, degree=None, subdomain_data=None):
        return Measure(self.kind, self.domain,
                       subdomain_data if subdomain_data is not None else self.subdomain_data,
                       tag if tag is not None else self.tag,
                       degree if degree is not None else self.degree)

    def key(self):
        sd = None if self.subdomain_data is None else id(self.subdomain_data)
        return (self.kind, self.domain.id, sd, self.tag, self.degree)

    def __rmul__(self, expr):
        return Form([Integral(as_expr(expr), self)])

    def render(self):
        name = "dx" if self.kind == "cell" else "ds"
        extra = "" if self.tag is None else f", tag={self.tag}"
        extra += "" if self.degree is None else f", degree={self.degree}"
        return f"{name}({self.domain.name}{extra})"


class Integral:
    def __init__(self, integrand, measure):
        self.integrand = integrand
        self.measure = measure

    def render(self):
        return f"{self.integrand.render()} * {self.measure.render()}"


class Form:
    """Sum of integrals.  ``block`` and ``spaces`` are set on extracted subforms."""

    def __init__(self, integrals=(), spaces=None, block=None):
        self.integrals = list(integrals)
        self.spaces = spaces
        self.block = block

    def __add__(self, other):
        if isinstance(other, numbers.Number) and other == 0:
            return self
        if not isinstance(other, Form):
            return NotImplemented
        return Form(self.integrals + other.integrals)

    __radd__ = __add__

    def __neg__(self):
        return Form([Integral(-i.integrand, i.measure) for i in self.integrals],
                    self.spaces, self.block)

    def __sub__(self, other):
        return self + (-other)

    @property
    def empty(self):
        return not self.integrals

    def arguments(self):
        out = []
        for integral in self.integrals:
            for a in integral.integrand.arguments():
                if a not in out:
                    out.append(a)
        return out

    @property
    def arity(self):
        if self.spaces is not None:
            return len(self.spaces)
        return len({a.number for a in self.arguments()})

    def argument_spaces(self):
        """Per argument number, the mixed space (or plain space) the arguments come from."""
        out = {}
        for a in self.arguments():
            out.setdefault(a.number, a.mixed_space if a.mixed_space is not None else a.space)
        return [out[n] for n in sorted(out)]

    def render(self):
        return format_form(self)


def format_form(form):
    """Canonical text rendering, stable across runs."""
    lines = []
    if form.block is not None:
        lines.append("block " + ",".join(str(b) for b in form.block))
    if not form.integrals:
        lines.append("<empty>")
    for k, integral in enumerate(form.integrals):
        lines.append(f"[{k}] {integral.render()}")
    return "\n".join(lines)


def expand(expr):
    """Distribute the Sums that contain arguments; returns a list of terms."""
    if not expr.has_arguments():
        return [expr]
    if isinstance(expr, Sum):
        return expand(expr.children[0]) + expand(expr.children[1])
    if isinstance(expr, _Operator):
        options = [expand(c) for c in expr.children]
        return [expr.rebuild(combo) for combo in itertools.product(*options)]
    return [expr]


def _term_signature(term):
    """{argument number: set of blocks} of one expanded term."""
    sig = {}
    for a in term.arguments():
        sig.setdefault(a.number, set()).add(a.block)
    return sig


def _nonlinear(expr):
    """True if some product node multiplies an argument number with itself."""
    for node in expr.traverse():
        if isinstance(node, (Product, Inner, ComponentMul)):
            left = {a.number for a in node.children[0].arguments()}
            right = {a.number for a in node.children[1].arguments()}
            if left & right:
                return True
    return False


def _argument_spaces(form):
    spaces = form.argument_spaces()
    out = []
    for s in spaces:
        out.append(list(s) if isinstance(s, MixedFunctionSpace) else [s])
    return out


def extract_blocks(form, i=None, j=None):
    """Grid of block subforms; with indices, the single subform at that position.

    Linear forms give a list, bilinear forms a list of lists.  Every entry is
    a ``Form`` (possibly empty) that carries its block index and spaces.
    """
    spaces = _argument_spaces(form)
    arity = len(spaces)
    if arity == 0:
        return form
    groups = {}
    for integral in form.integrals:
        for term in expand(integral.integrand):
            sig = _term_signature(term)
            if sorted(sig) != list(range(arity)) or any(len(b) != 1 for b in sig.values()):
                raise FormValidationError([FormError(
                    "MALFORMED_TERM", f"term {term.render()} does not have one block per argument")])
            block = tuple(next(iter(sig[n])) for n in range(arity))
            key = integral.measure.key()
            bucket = groups.setdefault(block, {})
            if key in bucket:
                bucket[key] = (bucket[key][0] + term, bucket[key][1])
            else:
                bucket[key] = (term, integral.measure)

    def sub(idx):
        integrals = [Integral(e, m) for e, m in groups.get(idx, {}).values()]
        return Form(integrals, spaces=tuple(spaces[n][idx[n]] for n in range(arity)), block=idx)

    if arity == 1:
        if i is not None:
            return sub((i,))
        return [sub((a,)) for a in range(len(spaces[0]))]
    if i is not None and j is not None:
        return sub((i, j))
    return [[sub((a, b)) for b in range(len(spaces[1]))] for a in range(len(spaces[0]))]


def _integral_meshes(integrand):
    meshes = []
    for node in integrand.traverse():
        if isinstance(node, (Argument, Coefficient)) and node.mesh not in meshes:
            meshes.append(node.mesh)
    return meshes


def validate(form):
    """List of ``FormError``; empty when the form is well formed."""
    errors = []
    args = form.arguments()

    by_number = {}
    for a in args:
        by_number.setdefault(a.number, []).append(a)
    spaces = {id(a.space) for a in args}
    if len(spaces) > 1:
        if any(a.mixed_space is None for a in args):
            errors.append(FormError(
                "MIXED_SPACE_REQUIRED",
                "arguments from different function spaces must come from a MixedFunctionSpace"))
        for number, group in by_number.items():
            if len({id(a.mixed_space) for a in group}) > 1:
                errors.append(FormError(
                    "MIXED_SPACE_REQUIRED",
                    f"arguments number {number} come from different mixed spaces"))

    arities = set()
    for k, integral in enumerate(form.integrals):
        measure = integral.measure
        integrand = integral.integrand
        iargs = integrand.arguments()
        meshes = [a.mesh for a in iargs] or _integral_meshes(integrand)
        if meshes and not any(m is measure.domain for m in meshes):
            errors.append(FormError(
                "MEASURE_DOMAIN_MISMATCH",
                f"measure over {measure.domain.name!r} matches no argument mesh", k))
        if _nonlinear(integrand):
            errors.append(FormError("NONLINEAR_ARGUMENT",
                                    "integrand is not linear in its arguments", k))
        for term in expand(integrand):
            sig = _term_signature(term)
            arities.add(tuple(sorted(sig)))
            if any(len(b) > 1 for b in sig.values()):
                errors.append(FormError("NONLINEAR_ARGUMENT",
                                        "a term combines two blocks of one argument", k))
            tdims = {a.mesh.tdim for a in term.arguments()}
            if len(tdims) > 1:
                if max(tdims) - min(tdims) > 1:
                    errors.append(FormError(
                        "UNSUPPORTED_CODIMENSION", "arguments differ by more than one dimension", k))
                elif measure.kind != "cell" or measure.domain.tdim != min(tdims):
                    errors.append(FormError(
                        "CODIM_MEASURE",
                        "coupling across dimensions needs a cell measure on the lower-dimensional mesh", k))
            blocks = {next(iter(b)) for b in sig.values()}
            if measure.kind == "exterior_facet" and len(sig) == 2 and len(blocks) > 1:
                errors.append(FormError(
                    "FACET_MEASURE_OFF_DIAGONAL",
                    "facet measures are only allowed on diagonal blocks", k))
    if len(arities) > 1:
        errors.append(FormError("ARITY_MISMATCH",
                                f"terms have different argument sets {sorted(arities)}"))
    # deduplicate while keeping order
    seen, unique = set(), []
    for e in errors:
        key = (e.code, e.integral, e.message)
        if key not in seen:
            seen.add(key)
            unique.append(e)
    return unique


def check(form):
    errors = validate(form)
    if errors:
        raise FormValidationError(errors)
    return form


def estimate_degree(expr):
    if isinstance(expr, Argument):
        return expr.space.degree
    if isinstance(expr, Coefficient):
        return expr.function.space.degree
    if isinstance(expr, AnalyticCoefficient):
        return expr.degree
    if isinstance(expr, Constant):
        return 0
    if isinstance(expr, SpatialCoordinate):
        return 1
    if isinstance(expr, (Grad, Div)):
        return max(estimate_degree(expr.children[0]) - 1, 0)
    if isinstance(expr, Sum):
        return max(estimate_degree(c) for c in expr.children)
    if isinstance(expr, (Product, Inner, ComponentMul)):
        return sum(estimate_degree(c) for c in expr.children)
    raise TypeError(f"unknown expression node {type(expr).__name__}")
