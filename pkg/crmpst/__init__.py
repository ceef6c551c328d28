"""
crmpst - Crash-stop multiparty session types.

Global protocols with reliable and unreliable roles are projected onto local types,
checked for safety, deadlock-freedom and liveness, and used to type and run processes
that may crash.
"""

__version__ = "0.2.0"

from . import semantics
from .registry import SemanticsRegistry, UnknownSemanticsError
from .interface import TransitionSystem, Send, Recv, Crash, CrashDetect
from .core_model import GlobalType, LocalType
from .parsing import ProtocolDecl, ProtocolError, parse_protocol, parse_process_script
from .projection import MergeError, ProjectionError, project, project_all
from .subtyping import subtype
from .verifier import ExplorationBounds, Verdict, Status, derive_canonical_config, verify_all
from .typecheck import typecheck_process, typecheck_session
from .semantics.global_lts import AnnotatedGlobal
from .semantics.session import run_session
from . import DEFAULTS

from typing import Dict
from tabulate import tabulate

from .rendering import render_local


class Crmpst:

    @staticmethod
    def load_protocol(source: str) -> ProtocolDecl:
        return parse_protocol(source)

    @staticmethod
    def verify(decl: ProtocolDecl, bounds: ExplorationBounds = ExplorationBounds()) -> Dict[str, Verdict]:
        '''
        Verify the canonical configuration of a protocol and its correspondence with the global type
        '''
        ann = AnnotatedGlobal.initial(decl.body)
        c0 = derive_canonical_config(ann, decl.reliable, decl.role_names)
        return verify_all(ann, c0, decl.reliable, bounds)

    @staticmethod
    def print_projections(decl: ProtocolDecl) -> None:
        '''
        Print the local type of every role in a formatted table
        '''
        projections = project_all(decl)
        headers = ["Role", "Reliable", "Local type"]
        table_data = [[role, "yes" if role in decl.reliable else "", render_local(t)]
                      for role, t in projections.items()]
        print(tabulate(table_data, headers=headers, tablefmt="fancy_grid"))

    @staticmethod
    def print_verdicts(verdicts: Dict[str, Verdict]) -> None:
        """
        Print verification results in a formatted table.

        Args:
        verdicts (Dict[str, Verdict]): Check name to verdict, as returned by verify
        """
        if not verdicts:
            print("No verdicts.")
            return
        headers = ["Check", "Verdict", "Witness length", "Reason"]
        table_data = [[name, v.status.value, len(v.witness) if v.witness else "", v.reason]
                      for name, v in verdicts.items()]
        print(tabulate(table_data, headers=headers, tablefmt="fancy_grid"))

    @staticmethod
    def print_registered_semantics() -> None:
        '''
        Print the registered transition systems and what they implement
        '''
        names = SemanticsRegistry.get_registered_semantics()
        if not names:
            print("No registered semantics.")
            return

        headers = ["Name", "Capabilities"]
        table_data = []
        for name in names:
            capabilities = SemanticsRegistry.get_capabilities(name)
            table_data.append([name, ", ".join(c for c, available in capabilities.items() if available)])

        print(tabulate(table_data, headers=headers, tablefmt="fancy_grid"))


crmpst = Crmpst()
