"""Configuration plane.

Reads and writes the YAML config document, installs its tables into a
:class:`~pathprotect.network.Network` and reads them back out.

Document layout (see ``data/two_path.yaml`` for a complete example)::

    seed: 1
    duration: 2.0
    mode: protected            # plain | unprotected | protected
    hosts:    [{name, ip}]
    switches:
      - name: s1
        ip: 10.255.0.1
        protection_connections: [{index, cid, pte, ports: [a, b], sn_space?, window?}]
        protected_flows:        [{match: {src_ip, dst_ip, src_port, dst_port, protocol},
                                  priority, connection}]
        routes:                 [{prefix, port}]
    links:
      - {name, a: node:port, b: node:port, delay, jitter, loss, capacity?, down?,
         reverse?: {...overrides for b -> a...}}
    traffic:
      - {kind: cbr|ping, name, src, dst, count, interval, start?, size?, protocol?,
         src_port?, dst_port?}

Match fields accept ``"*"`` (or omission) for a wildcard, ``10.0.0.0/8`` style
prefixes for addresses, plain integers for exact ports and protocols,
``udp``/``tcp``/``icmp`` for the protocol, or an explicit ``{value, mask}``.
"""

from __future__ import annotations

import dataclasses
import ipaddress

import yaml

from .errors import ConflictError, ParseError, ValidationError
from .forwarding import prefix_mask
from .network import Network
from .pti import FIELD_WIDTHS, FIELDS, FlowMatch, FlowRule, FlowTable, Ternary, new_connection
from .scenario import (ConnectionSpec, Endpoint, FlowSpec, HostSpec, LinkModel, LinkSpec,
                       RouteSpec, Scenario, SwitchSpec, TrafficSpec, validate)
from .seqwin import SN_SPACE, SeqParams
from .wire import FiveTuple, int_to_ip

PROTOCOL_NAMES = {"icmp": 1, "ipv4": 4, "tcp": 6, "udp": 17}

_TOP_KEYS = {"name", "seed", "duration", "mode", "protect_protocol", "max_connections",
             "hosts", "switches", "links", "traffic"}
_LINK_MODEL_KEYS = {"delay", "jitter", "loss", "capacity", "down"}


# --- document reading ------------------------------------------------------

def _line_index(node, path, out):
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            _line_index(v, f"{path}.{key}" if path else key, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_index(v, f"{path}[{i}]", out)


def _line_for(path, lines):
    while path:
        if path in lines:
            return lines[path]
        cut = max(path.rfind("."), path.rfind("["))
        path = path[:cut] if cut > 0 else ""
    return None


class _Reader:
    """Typed field access on the raw YAML tree with path-aware errors."""

    def __init__(self, lines):
        self.lines = lines

    def fail(self, msg, path):
        raise ParseError(msg, path, _line_for(path, self.lines))

    def mapping(self, obj, path, allowed):
        if not isinstance(obj, dict):
            self.fail("expected a mapping", path)
        extra = set(obj) - set(allowed)
        if extra:
            key = sorted(map(str, extra))[0]
            self.fail(f"unknown key {key!r}", f"{path}.{key}" if path else key)
        return obj

    def seq(self, obj, path):
        if obj is None:
            return []
        if not isinstance(obj, list):
            self.fail("expected a list", path)
        return obj

    def req(self, obj, key, path):
        if key not in obj:
            self.fail(f"missing required key {key!r}", path)
        return obj[key]

    def int(self, v, path):
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(f"expected an integer, got {v!r}", path)
        return v

    def num(self, v, path):
        if isinstance(v, str):
            try:
                float(v)
            except ValueError:
                pass
            else:
                # YAML 1.1 reads 1e9 as a string; it wants 1.0e+9
                self.fail(f"expected a number, got the string {v!r} "
                          "(write exponents as 1.0e+9)", path)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"expected a number, got {v!r}", path)
        return float(v)

    def str(self, v, path):
        if not isinstance(v, str):
            self.fail(f"expected a string, got {v!r}", path)
        return v


def _ternary(r: _Reader, name, v, path) -> Ternary:
    width = FIELD_WIDTHS[name]
    full = (1 << width) - 1
    if v is None or v == "*":
        return Ternary(0, 0)
    if isinstance(v, dict):
        r.mapping(v, path, {"value", "mask"})
        value = _scalar(r, name, r.req(v, "value", path), f"{path}.value")
        mask = _scalar(r, name, r.req(v, "mask", path), f"{path}.mask")
        if value & ~mask:
            r.fail("value has bits outside the mask", path)
        return Ternary(value, mask)
    if name.endswith("_ip"):
        try:
            net = ipaddress.IPv4Network(r.str(v, path), strict=True)
        except ValueError as e:
            r.fail(str(e), path)
        return Ternary(int(net.network_address), prefix_mask(net.prefixlen))
    return Ternary(_scalar(r, name, v, path), full)


def _scalar(r: _Reader, name, v, path) -> int:
    width = FIELD_WIDTHS[name]
    if name.endswith("_ip") and isinstance(v, str):
        try:
            return int(ipaddress.IPv4Address(v))
        except ValueError as e:
            r.fail(str(e), path)
    if name == "protocol" and isinstance(v, str):
        if v.lower() not in PROTOCOL_NAMES:
            r.fail(f"unknown protocol name {v!r}", path)
        return PROTOCOL_NAMES[v.lower()]
    v = r.int(v, path)
    if not 0 <= v < 1 << width:
        r.fail(f"{v} does not fit in {width} bits", path)
    return v


def _link_model(r: _Reader, obj, path, base: LinkModel | None = None) -> LinkModel:
    base = base or LinkModel()
    kw = {}
    if "delay" in obj:
        kw["base_delay"] = r.num(obj["delay"], f"{path}.delay")
    if "jitter" in obj:
        j = obj["jitter"]
        jpath = f"{path}.jitter"
        if isinstance(j, list):
            if len(j) != 2:
                r.fail("jitter range needs exactly [low, high]", jpath)
            kw["jitter"] = (r.num(j[0], jpath), r.num(j[1], jpath))
        else:
            kw["jitter"] = (0.0, r.num(j, jpath))
    if "loss" in obj:
        kw["loss_rate"] = r.num(obj["loss"], f"{path}.loss")
    if "capacity" in obj:
        c = obj["capacity"]
        kw["capacity"] = None if c is None else r.num(c, f"{path}.capacity")
    if "down" in obj:
        intervals = []
        for i, iv in enumerate(r.seq(obj["down"], f"{path}.down")):
            ipath = f"{path}.down[{i}]"
            if not isinstance(iv, list) or len(iv) != 2:
                r.fail("failure interval must be [down_at, up_at]", ipath)
            intervals.append((r.num(iv[0], ipath), r.num(iv[1], ipath)))
        kw["down"] = tuple(intervals)
    return dataclasses.replace(base, **kw)


def _endpoint(r: _Reader, v, path) -> Endpoint:
    text = r.str(v, path)
    node, sep, port = text.rpartition(":")
    if not sep or not node or not port.isdigit():
        r.fail(f"endpoint must look like 'node:port', got {text!r}", path)
    return Endpoint(node, int(port))


def _from_tree(tree, lines) -> Scenario:
    r = _Reader(lines)
    if tree is None:
        tree = {}
    r.mapping(tree, "", _TOP_KEYS)
    hosts = []
    for i, h in enumerate(r.seq(tree.get("hosts"), "hosts")):
        p = f"hosts[{i}]"
        r.mapping(h, p, {"name", "ip"})
        hosts.append(HostSpec(r.str(r.req(h, "name", p), f"{p}.name"),
                              r.str(r.req(h, "ip", p), f"{p}.ip")))

    switches = []
    for i, sw in enumerate(r.seq(tree.get("switches"), "switches")):
        p = f"switches[{i}]"
        r.mapping(sw, p, {"name", "ip", "protection_connections", "protected_flows", "routes"})
        conns = []
        for j, c in enumerate(r.seq(sw.get("protection_connections"),
                                    f"{p}.protection_connections")):
            cp = f"{p}.protection_connections[{j}]"
            r.mapping(c, cp, {"index", "cid", "pte", "ports", "sn_space", "window"})
            ports = r.seq(r.req(c, "ports", cp), f"{cp}.ports")
            if len(ports) != 2:
                r.fail("exactly two egress ports are required", f"{cp}.ports")
            n = r.int(c.get("sn_space", SN_SPACE), f"{cp}.sn_space")
            w = c.get("window")
            w = None if w is None else r.int(w, f"{cp}.window")
            if w is not None and 2 * w == n:
                w = None
            conns.append(ConnectionSpec(
                r.int(r.req(c, "index", cp), f"{cp}.index"),
                r.int(r.req(c, "cid", cp), f"{cp}.cid"),
                r.str(r.req(c, "pte", cp), f"{cp}.pte"),
                tuple(r.int(x, f"{cp}.ports") for x in ports), n, w))
        flows = []
        for j, f in enumerate(r.seq(sw.get("protected_flows"), f"{p}.protected_flows")):
            fp = f"{p}.protected_flows[{j}]"
            r.mapping(f, fp, {"match", "priority", "connection"})
            m = f.get("match") or {}
            r.mapping(m, f"{fp}.match", set(FIELDS))
            match = FlowMatch(**{name: _ternary(r, name, m.get(name), f"{fp}.match.{name}")
                                 for name in FIELDS})
            flows.append(FlowSpec(match, r.int(f.get("priority", 0), f"{fp}.priority"),
                                  r.int(r.req(f, "connection", fp), f"{fp}.connection")))
        routes = []
        for j, rt in enumerate(r.seq(sw.get("routes"), f"{p}.routes")):
            rp = f"{p}.routes[{j}]"
            r.mapping(rt, rp, {"prefix", "port"})
            routes.append(RouteSpec(r.str(r.req(rt, "prefix", rp), f"{rp}.prefix"),
                                    r.int(r.req(rt, "port", rp), f"{rp}.port")))
        switches.append(SwitchSpec(r.str(r.req(sw, "name", p), f"{p}.name"),
                                   r.str(r.req(sw, "ip", p), f"{p}.ip"),
                                   tuple(conns), tuple(flows), tuple(routes)))

    links = []
    for i, ln in enumerate(r.seq(tree.get("links"), "links")):
        p = f"links[{i}]"
        r.mapping(ln, p, {"name", "a", "b", "reverse"} | _LINK_MODEL_KEYS)
        fwd = _link_model(r, ln, p)
        rev_over = ln.get("reverse") or {}
        r.mapping(rev_over, f"{p}.reverse", _LINK_MODEL_KEYS)
        rev = _link_model(r, rev_over, f"{p}.reverse", fwd)
        links.append(LinkSpec(r.str(ln.get("name", f"link{i}"), f"{p}.name"),
                              _endpoint(r, r.req(ln, "a", p), f"{p}.a"),
                              _endpoint(r, r.req(ln, "b", p), f"{p}.b"), fwd, rev))

    traffic = []
    for i, t in enumerate(r.seq(tree.get("traffic"), "traffic")):
        p = f"traffic[{i}]"
        r.mapping(t, p, {f.name for f in dataclasses.fields(TrafficSpec)})
        kw = {}
        for key in ("kind", "name", "src", "dst", "protocol"):
            if key in t:
                kw[key] = r.str(t[key], f"{p}.{key}")
        for key in ("count", "size", "src_port", "dst_port"):
            if key in t:
                kw[key] = r.int(t[key], f"{p}.{key}")
        for key in ("interval", "start"):
            if key in t:
                kw[key] = r.num(t[key], f"{p}.{key}")
        for key in ("kind", "name", "src", "dst", "count", "interval"):
            r.req(t, key, p)
        traffic.append(TrafficSpec(**kw))

    top = {}
    for key in ("seed", "max_connections", "protect_protocol"):
        if key in tree:
            top[key] = r.int(tree[key], key)
    if "duration" in tree:
        top["duration"] = r.num(tree["duration"], "duration")
    for key in ("mode", "name"):
        if key in tree:
            top[key] = r.str(tree[key], key)
    return Scenario(tuple(hosts), tuple(switches), tuple(links), tuple(traffic), **top)


def load_config(text: str) -> Scenario:
    """Parse and validate a config document.

    Raises :class:`ParseError` carrying the line and field path of the first
    problem found.
    """
    loader = yaml.SafeLoader(text)
    try:
        try:
            node = loader.get_single_node()
            tree = loader.construct_document(node) if node is not None else None
        except yaml.MarkedYAMLError as e:
            mark = e.problem_mark or e.context_mark
            raise ParseError(e.problem or str(e), "",
                             mark.line + 1 if mark else None) from None
    finally:
        loader.dispose()
    lines = {}
    if node is not None:
        _line_index(node, "", lines)
    scenario = _from_tree(tree, lines)
    try:
        validate(scenario)
    except ParseError:
        raise
    except ValidationError as e:
        raise ParseError(e.message, e.path, _line_for(e.path, lines)) from None
    return scenario


def load_config_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_config(fh.read())


# --- document writing ------------------------------------------------------

def _dump_ternary(name, t: Ternary):
    width = FIELD_WIDTHS[name]
    full = (1 << width) - 1
    if t.mask == 0:
        return None
    if name.endswith("_ip"):
        plen = bin(t.mask).count("1")
        if t.mask == prefix_mask(plen):
            return f"{int_to_ip(t.value)}/{plen}"
        return {"value": int_to_ip(t.value), "mask": int_to_ip(t.mask)}
    if t.mask == full:
        return t.value
    return {"value": t.value, "mask": t.mask}


def _dump_model(m: LinkModel) -> dict:
    out = {"delay": m.base_delay, "jitter": list(m.jitter), "loss": m.loss_rate}
    if m.capacity is not None:
        out["capacity"] = m.capacity
    if m.down:
        out["down"] = [list(iv) for iv in m.down]
    return out


def scenario_to_tree(s: Scenario) -> dict:
    tree = {"name": s.name, "seed": s.seed, "duration": s.duration, "mode": s.mode,
            "protect_protocol": s.protect_protocol, "max_connections": s.max_connections,
            "hosts": [{"name": h.name, "ip": h.ip} for h in s.hosts], "switches": []}
    for sw in s.switches:
        conns = []
        for c in sw.connections:
            d = {"index": c.index, "cid": c.cid, "pte": c.pte, "ports": list(c.ports)}
            if c.sn_space != SN_SPACE:
                d["sn_space"] = c.sn_space
            if c.window is not None:
                d["window"] = c.window
            conns.append(d)
        flows = []
        for f in sw.flows:
            match = {}
            for name in FIELDS:
                v = _dump_ternary(name, getattr(f.match, name))
                if v is not None:
                    match[name] = v
            flows.append({"match": match, "priority": f.priority, "connection": f.connection})
        tree["switches"].append({
            "name": sw.name, "ip": sw.ip, "protection_connections": conns,
            "protected_flows": flows,
            "routes": [{"prefix": r.prefix, "port": r.port} for r in sw.routes]})
    links = []
    for ln in s.links:
        d = {"name": ln.name, "a": str(ln.a), "b": str(ln.b), **_dump_model(ln.forward)}
        if ln.reverse != ln.forward:
            d["reverse"] = _dump_model(ln.reverse)
        links.append(d)
    tree["links"] = links
    defaults = TrafficSpec("cbr", "", "", "", 0, 1.0)
    traffic = []
    for t in s.traffic:
        d = {}
        for f in dataclasses.fields(TrafficSpec):
            v = getattr(t, f.name)
            if f.name in ("kind", "name", "src", "dst", "count", "interval") \
                    or v != getattr(defaults, f.name):
                d[f.name] = v
        traffic.append(d)
    tree["traffic"] = traffic
    return tree


def dump_config(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_tree(s), sort_keys=False, default_flow_style=None)


# --- installing and reading back -------------------------------------------

def apply(cfg: Scenario, network: Network) -> Network:
    """Install every table of ``cfg`` into ``network``.

    Counters and receiver windows start at zero.  Raises
    :class:`ConflictError` if an entry clashes with installed state (for
    instance when the same document is applied twice) or if a flow rule is
    fully shadowed by higher-priority rules.
    """
    validate(cfg)
    for spec in cfg.switches:
        node = network.switches[spec.name]
        for c in spec.connections:
            pte = network.switches[c.pte]
            node.add_connection(new_connection(c.index, c.cid, node.ip, pte.ip, c.ports,
                                               c.sn_space))
            pte.pte.register(c.cid, SeqParams(c.sn_space, c.window))
        for f in spec.flows:
            conn = node.connections[f.connection]
            node.flows.install(FlowRule(f.match, f.priority, conn.params))
        for r in spec.routes:
            node.routes.add_cidr(r.prefix, r.port)
    for spec in cfg.switches:
        node = network.switches[spec.name]
        for rule in unreachable_rules(node.flows):
            raise ConflictError(
                f"{spec.name}: flow rule with priority {rule.priority} is shadowed by "
                "higher-priority rules and can never match")
    network.configured = True
    return network


def dump(network: Network) -> Scenario:
    """Read the installed tables back into a config document."""
    switches = []
    for spec in network.scenario.switches:
        node = network.switches[spec.name]
        conns = []
        for conn in node.connections.values():
            pte = network.node_by_ip(conn.pte_ip)
            params = pte.pte[conn.cid].params
            conns.append(ConnectionSpec(conn.index, conn.cid, pte.name, conn.egress_ports,
                                        params.sn_space,
                                        None if params.halved else params.window))
        flows = tuple(FlowSpec(r.match, r.priority, r.action.index) for r in node.flows.rules())
        routes = tuple(RouteSpec(r.cidr, r.egress_port) for r in node.routes.routes())
        switches.append(dataclasses.replace(spec, connections=tuple(conns), flows=flows,
                                            routes=routes))
    return dataclasses.replace(network.scenario, switches=tuple(switches))


# --- rule reachability -----------------------------------------------------

def _bits(x):
    while x:
        low = x & -x
        yield low
        x ^= low


def rule_witness(table: FlowTable, rule: FlowRule, budget: int = 200_000):
    """Find a 5-tuple that ``table`` classifies as ``rule``.

    Returns a :class:`FiveTuple`, ``None`` when the rule is provably
    shadowed, or ``...`` when the search budget ran out.
    """
    order = table.lookup_order()
    ahead = order[:order.index(rule)]
    fixed_mask = {f: getattr(rule.match, f).mask for f in FIELDS}
    fixed_val = {f: getattr(rule.match, f).value for f in FIELDS}

    def excluded(h, fm, fv):
        # h can no longer match once some fixed bit disagrees with it
        for f in FIELDS:
            t = getattr(h.match, f)
            common = t.mask & fm[f]
            if (fv[f] ^ t.value) & common:
                return True
        return False

    live = [h for h in ahead if not excluded(h, fixed_mask, fixed_val)]
    steps = [0]

    def search(i, fm, fv):
        steps[0] += 1
        if steps[0] > budget:
            raise TimeoutError
        while i < len(live) and excluded(live[i], fm, fv):
            i += 1
        if i == len(live):
            return fm, fv
        h = live[i]
        rest = live[i + 1:]
        for f in FIELDS:
            t = getattr(h.match, f)
            seen = set()
            for bit in _bits(t.mask & ~fm[f]):
                # bits that look alike to every remaining rule are interchangeable
                sig = (bool(t.value & bit),) + tuple(
                    (bool(getattr(o.match, f).mask & bit), bool(getattr(o.match, f).value & bit))
                    for o in rest)
                if sig in seen:
                    continue
                seen.add(sig)
                nfm, nfv = dict(fm), dict(fv)
                nfm[f] |= bit
                nfv[f] |= (~t.value) & bit
                found = search(i + 1, nfm, nfv)
                if found:
                    return found
        return None

    try:
        found = search(0, fixed_mask, fixed_val)
    except TimeoutError:
        return ...
    if found is None:
        return None
    return FiveTuple(**found[1])


def unreachable_rules(table: FlowTable) -> list[FlowRule]:
    return [r for r in table.lookup_order() if rule_witness(table, r) is None]
