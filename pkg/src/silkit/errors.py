"""Exception types shared across the toolkit."""


class SilkitError(Exception):
    """Base class for all toolkit errors."""


class InvalidArchitecture(SilkitError):
    """An interaction does not intersect the domain."""


class NotDisjoint(SilkitError):
    """Composition of architectures with overlapping domains."""


class ParseError(SilkitError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = "%s (line %d, column %d)" % (message, line, column)
        super().__init__(message)


class UnboundVariable(SilkitError):
    """A variable of a term or formula is not bound by the valuation."""


class BudgetUnsupported(SilkitError):
    """The enumeration budget cannot finitize the required quantification."""


class NotInFragment(SilkitError):
    """Formula outside the expected syntactic fragment."""


class VisiblePortsExceeded(SilkitError):
    """ports_of(formula) is not contained in the visible port list."""


class CapExceeded(SilkitError):
    """A configured size cap was exceeded; carries the size explanation."""


class DomainNotVisible(SilkitError):
    """An architecture domain is not contained in the visible port set."""


class NotWellFormed(SilkitError):
    """A boolean valuation does not satisfy the well-formedness formula."""


class NotInvisibleDomainPort(SilkitError):
    """The port is not an invisible member of the architecture domain."""


class NotPrenex(SilkitError):
    """QBF input is not in the expected prenex shape."""


class UnassignedFree(SilkitError):
    """A free QBF variable has no assigned value."""


class ResourceLimit(SilkitError):
    """The QBF solver exceeded its node cap."""


class ArityMismatch(SilkitError):
    """Predicate used with the wrong number of arguments."""


class NegativePolarity(SilkitError):
    """Rule body contains a construct outside the positive fragment."""


class UnknownPredicate(SilkitError):
    """Reference to a predicate that was never defined."""


class UndefinedRestriction(SilkitError):
    """FSM restriction is undefined for a transition label."""

    def __init__(self, label):
        self.label = label
        super().__init__("restriction undefined for label {%s}" % ",".join(sorted(label)))


class UnknownState(SilkitError):
    """Reference to a state outside the FSM."""


class ModifiedVarInFrame(SilkitError):
    """Frame formula mentions a variable modified by the action."""


class Stuck(SilkitError):
    """An operational reconfiguration step has a failing premise."""

    def __init__(self, rule, reason, index=None, trace=None):
        self.rule = rule
        self.reason = reason
        self.index = index
        self.trace = trace
        msg = "stuck in rule [%s]: %s" % (rule, reason)
        if index is not None:
            msg += " (action #%d)" % index
        super().__init__(msg)
