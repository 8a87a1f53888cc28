#!/usr/bin/env python3
"""Regenerates the bundled scenario fixtures under scenarios/.

Keeping the fixtures generated keeps the larger ones (the packet-in
avalanche pair) reviewable and easy to rescale.
"""

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "scenarios"


def mac(n: int) -> str:
    return ":".join(f"{(n >> (8 * i)) & 0xFF:02x}" for i in range(5, -1, -1))


def host(name, mac_int, ip, switch, port, capacity=100.0, delay=0.05,
         power="on"):
    return {
        "name": name,
        "mac": mac(mac_int),
        "ip": ip,
        "switch": switch,
        "port": port,
        "capacity_mbps": capacity,
        "delay_ms": delay,
        "power": power,
    }


def link(a, a_port, b, b_port, capacity=10.0, delay=0.05, power="on"):
    return {
        "a": a,
        "a_port": a_port,
        "b": b,
        "b_port": b_port,
        "capacity_mbps": capacity,
        "delay_ms": delay,
        "power": power,
    }


def switch(dpid, fail_mode="standalone", power="on"):
    return {"dpid": dpid, "fail_mode": fail_mode, "power": power}


def ping(src, dst_ip, count, interval, start):
    return {
        "type": "ping",
        "src": src,
        "dst_ip": dst_ip,
        "count": count,
        "interval_s": interval,
        "start_s": start,
    }


def tcp(src, dst_ip, start, duration, dst_port=5002):
    return {
        "type": "tcp",
        "src": src,
        "dst_ip": dst_ip,
        "dst_port": dst_port,
        "start_s": start,
        "duration_s": duration,
    }


def udp(src, dst_ip, rate_mbps, start, duration, dst_port=9000):
    return {
        "type": "udp",
        "src": src,
        "dst_ip": dst_ip,
        "dst_port": dst_port,
        "rate_mbps": rate_mbps,
        "start_s": start,
        "duration_s": duration,
    }


def base(name, seed, duration, **extra):
    scn = {
        "name": name,
        "seed": seed,
        "duration_s": duration,
        "activation_latency_s": 0.5,
        "ping_timeout_s": 10.0,
        "controllers": {"count": 1},
        "demands": [],
        "failures": [],
    }
    scn.update(extra)
    return scn


def write(scn):
    OUT.mkdir(exist_ok=True)
    path = OUT / f"{scn['name']}.json"
    path.write_text(json.dumps(scn, indent=2) + "\n")
    print(f"wrote {path}")


# --- fail-mode continuity -------------------------------------------------

def failover_pair():
    for mode in ("standalone", "secure"):
        scn = base(f"failover_{mode}", 101, 3.5)
        scn["topology"] = {
            "switches": [switch(1, mode), switch(2, mode)],
            "hosts": [
                host("h1", 1, "10.0.0.1", 1, 1),
                host("h2", 2, "10.0.0.2", 2, 1),
            ],
            "links": [link(1, 2, 2, 2)],
        }
        scn["demands"] = [
            ping("h1", "10.0.0.2", 4, 0.25, 0.2),
            ping("h1", "10.0.0.2", 4, 0.25, 2.0),
        ]
        scn["failures"] = [
            {"type": "cut_control_channel", "dpid": 1, "at_s": 1.5},
            {"type": "cut_control_channel", "dpid": 2, "at_s": 1.5},
        ]
        write(scn)


# --- server farm with parallel access paths -------------------------------

def farm_topology():
    switches = [switch(d) for d in (1, 2, 3, 4, 5)]
    hosts = []
    for i in range(1, 10):  # clients h1..h9, MAC ints 1..9
        hosts.append(host(f"h{i}", i, f"10.0.1.{i}", 1, 10 + i))
    for j, mac_int in enumerate((21, 22, 23)):
        hosts.append(host(f"h2{j + 1}", mac_int, f"10.0.2.{j + 1}", 5,
                          21 + j, capacity=30.0))
    links = [
        link(1, 2, 2, 1), link(1, 3, 3, 1), link(1, 4, 4, 1),
        link(2, 2, 5, 1), link(3, 2, 5, 2), link(4, 2, 5, 3),
    ]
    return {"switches": switches, "hosts": hosts, "links": links}


def farm_pair():
    select = base("farm_select", 7, 13.0)
    select["topology"] = farm_topology()
    select["farm"] = {
        "virtual_ip": "10.0.0.100",
        "servers": ["h21", "h22", "h23"],
        "initial_active": 0,
        "idle_timer_s": 60.0,
        "flows_per_server": 9,
    }
    select["demands"] = [ping("h1", "10.0.0.100", 12, 1.0, 0.4)]
    for i in range(9):
        select["demands"].append(
            tcp(f"h{i + 1}", "10.0.0.100", 1.0, 10.0))
    write(select)

    single = base("farm_single", 7, 13.0)
    single["topology"] = farm_topology()
    single["farm"] = {
        "virtual_ip": "10.0.0.100",
        "servers": ["h21"],
        "initial_active": 0,
        "idle_timer_s": 60.0,
        "flows_per_server": 9,
    }
    single["controllers"] = {"count": 1, "use_select_groups": False}
    single["demands"] = list(select["demands"])
    write(single)


# --- TCP against unresponsive UDP -----------------------------------------

def udp_pair():
    for name, use_select, seed in (("udp_noselect", False, 31),
                                   ("udp_select", True, 31)):
        scn = base(name, seed, 14.5)
        scn["topology"] = {
            "switches": [switch(d) for d in (1, 2, 3, 4)],
            "hosts": [
                host("h1", 1, "10.0.0.1", 1, 11),
                host("h2", 2, "10.0.0.2", 1, 12),
                host("h3", 3, "10.0.0.3", 1, 13),
                host("h4", 4, "10.0.0.4", 1, 14),
                host("h9", 9, "10.0.0.9", 2, 11),
            ],
            "links": [
                link(1, 3, 3, 1), link(3, 2, 2, 3),
                link(1, 4, 4, 1), link(4, 2, 2, 4),
            ],
        }
        scn["controllers"] = {"count": 1, "use_select_groups": use_select}
        scn["demands"] = [
            udp("h2", "10.0.0.9", 2.16, 1.0, 12.0),
            udp("h3", "10.0.0.9", 2.16, 1.05, 12.0),
            udp("h4", "10.0.0.9", 2.16, 1.1, 12.0),
            tcp("h1", "10.0.0.9", 2.0, 10.0),
        ]
        write(scn)


# --- packet-in avalanche for the arbitration comparison --------------------

def arbitration_pair():
    n_sources = 20
    n_targets_s1 = 230
    n_targets_s2 = 70

    switches = [switch(1), switch(2)]
    hosts = []
    mac_int = 1
    for i in range(n_sources):
        hosts.append(host(f"src{i}", mac_int, f"10.0.1.{i + 1}", 1, 100 + i))
        mac_int += 1
    for i in range(n_targets_s1):
        hosts.append(host(f"t{i}", mac_int, f"10.0.2.{i + 1}", 1, 300 + i))
        mac_int += 1
    for i in range(n_targets_s2):
        hosts.append(
            host(f"u{i}", mac_int, f"10.0.3.{i + 1}", 2, 300 + i))
        mac_int += 1

    demands = []
    at = 1.5
    for i in range(n_targets_s1):
        demands.append(ping(f"src{i % n_sources}", f"10.0.2.{i + 1}", 1, 1.0,
                            round(at, 3)))
        at += 0.01
    for i in range(n_targets_s2):
        demands.append(ping(f"src{i % n_sources}", f"10.0.3.{i + 1}", 1, 1.0,
                            round(at, 3)))
        at += 0.01

    for name, scheme in (("arbitration_bycounter", "by_counter"),
                         ("arbitration_bydpid", "by_dpid")):
        scn = base(name, 11, 8.0)
        scn["topology"] = {
            "switches": switches,
            "hosts": hosts,
            "links": [link(1, 2, 2, 2)],
        }
        scn["controllers"] = {
            "count": 2,
            "equal_mode": True,
            "scheme": scheme,
        }
        scn["demands"] = demands
        write(scn)


# --- manager connection-handling comparison --------------------------------

def manager_pair():
    for name, mode in (("manager_concurrent", "concurrent"),
                       ("manager_serial", "serial")):
        scn = base(name, 13, 10.5)
        scn["topology"] = {
            "switches": [switch(1)],
            "hosts": [
                host("h1", 1, "10.0.0.1", 1, 1),
                host("h2", 2, "10.0.0.2", 1, 2),
            ],
            "links": [],
        }
        scn["controllers"] = {"count": 2}
        scn["manager"] = {"conn_mode": mode}
        write(scn)


# --- elastic activation of a cold farm segment ------------------------------

def elastic():
    scn = base("elastic_activation", 21, 9.5)
    scn["topology"] = {
        "switches": [switch(1), switch(2, power="off"),
                     switch(3, power="off")],
        "hosts": [
            host("h1", 1, "10.0.0.1", 1, 1),
            host("h4", 4, "10.0.0.4", 3, 2, power="off"),
            host("h5", 5, "10.0.0.5", 3, 3, power="off"),
            host("h6", 6, "10.0.0.6", 3, 4, power="off"),
        ],
        "links": [
            link(1, 2, 2, 1, power="off"),
            link(2, 2, 3, 1, power="off"),
        ],
    }
    scn["farm"] = {
        "virtual_ip": "10.0.0.100",
        "servers": ["h4", "h5", "h6"],
        "initial_active": 1,
        "idle_timer_s": 3.0,
        "flows_per_server": 3,
        "segment": {
            "switches": [2, 3],
            "links": [["s1", "s2"], ["s2", "s3"]],
        },
    }
    scn["demands"] = [
        ping("h1", "10.0.0.100", 6, 0.2, 0.5),
        ping("h1", "10.0.0.100", 3, 0.3, 7.0),
    ]
    write(scn)


# --- broadcast loop suppression in a ring -----------------------------------

def loop_ring():
    scn = base("loop_ring", 17, 2.0)
    scn["topology"] = {
        "switches": [switch(d) for d in (1, 2, 3)],
        "hosts": [
            host("h1", 1, "10.0.0.1", 1, 1),
            host("h2", 2, "10.0.0.2", 2, 1),
        ],
        "links": [link(1, 2, 2, 2), link(2, 3, 3, 2), link(3, 3, 1, 3)],
    }
    scn["demands"] = [ping("h1", "10.0.0.2", 2, 0.5, 0.1)]
    write(scn)


# --- master failover with a revived controller ------------------------------

def failover_master():
    scn = base("failover_master", 1, 6.5)
    scn["topology"] = {
        "switches": [switch(1)],
        "hosts": [
            host("h1", 1, "10.0.0.1", 1, 1),
            host("h2", 2, "10.0.0.2", 1, 2),
        ],
        "links": [],
    }
    scn["controllers"] = {"count": 2}
    scn["demands"] = [ping("h1", "10.0.0.2", 40, 0.1, 0.5)]
    scn["failures"] = [
        {"type": "kill_master", "at_s": 2.05},
        {"type": "revive_controller", "index": 0, "at_s": 4.0},
    ]
    write(scn)


if __name__ == "__main__":
    failover_pair()
    farm_pair()
    udp_pair()
    arbitration_pair()
    manager_pair()
    elastic()
    loop_ring()
    failover_master()
