"""Runtime objects instantiated from a scenario (before any tables are installed)."""

from __future__ import annotations

from dataclasses import dataclass

from .node import Node
from .scenario import Scenario
from .wire import ip_to_int


@dataclass
class Host:
    name: str
    ip: int


class Network:
    """Bare nodes of a scenario; the controller fills in their tables."""

    def __init__(self, scenario: Scenario, mode: str | None = None):
        self.scenario = scenario
        self.mode = mode or scenario.mode
        self.hosts = {h.name: Host(h.name, ip_to_int(h.ip)) for h in scenario.hosts}
        self.switches = {
            s.name: Node(s.name, s.ip, self.mode, scenario.protect_protocol,
                         scenario.max_connections)
            for s in scenario.switches
        }
        self.configured = False

    def node_by_ip(self, ip: int):
        for node in list(self.switches.values()) + list(self.hosts.values()):
            if node.ip == ip:
                return node
        return None
