"""Userspace 1+1 path protection for IPv4.

A tunnel ingress (PTI) duplicates each protected packet onto two disjoint
paths, stamping both copies with the same per-connection sequence number.
The tunnel egress (PTE) forwards whichever copy arrives first and drops the
other using a sliding acceptance window over a wrapping SN space.
"""

from .errors import (AlreadyProtected, ConflictError, DropDecision, MalformedPacket, ParamError,
                     ParseError, PathProtectError, RangeError, UnknownCid, ValidationError,
                     WrongLayer)
from .seqwin import (SN_SPACE, AcceptState, Decision, SeqParams, SnCounter, accept,
                     accept_general, accept_reformulated, max_compensable_delay, next_sn)
from .wire import (PROTO_PROTECT, FiveTuple, Packet, ProtectionHeader, Stack, encapsulate,
                   parse_packet, parse_protection, strip_outer_ip, strip_protection)
from .forwarding import LpmTable, Route
from .pti import FlowMatch, FlowRule, FlowTable, ProtectionConnection, Ternary, classify
from .pte import PteTable, Verdict, decaps_ip, decaps_p
from .node import Node, ingress_pipeline
from .scenario import Scenario, validate
from .network import Network
from .controller import apply, dump, dump_config, load_config, load_config_file
from .netsim import MetricsRecord, Simulator, run

__version__ = "0.1.0"
