"""Protocol scripts: a small line-oriented language for atom/cavity sequences.

>>> from cqed_teleport.script import parse, execute
>>> p = parse("atom A cascade f g\\nprepare A |f>\\nmeasure A\\n")
>>> [b.outcomes for b in execute(p).branches]
[{'A': 'f'}]
"""

from .interpreter import AssertionResult, RunBranch, RunReport, execute
from .lexer import Diagnostic, ScriptError, tokenize
from .parser import ParseResult, ScriptSource, load, parse, parse_source
from .printer import dump_ast, format_protocol
from .validate import check, validate

__all__ = [
    "AssertionResult",
    "Diagnostic",
    "ParseResult",
    "RunBranch",
    "RunReport",
    "ScriptError",
    "ScriptSource",
    "check",
    "dump_ast",
    "execute",
    "format_protocol",
    "load",
    "parse",
    "parse_source",
    "tokenize",
    "validate",
]
