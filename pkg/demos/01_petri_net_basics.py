"""Petri net basics: build the traffic-light net, play the token game,
and verify its reachability graph.

Run with:  python3 demos/01_petri_net_basics.py
"""

from pncrl.petri import reachability, serialize_net, traffic_light_net

net = traffic_light_net()

print("Places:", ", ".join(net.places))
print("Transitions:", ", ".join(net.transitions))

# The initial marking: every signal group red, the shared Safe place marked.
m = net.initial_marking
print("\nInitial marking:", dict(m.tokens))

# Only the four red-to-green transitions are enabled while Safe is marked.
print("Enabled at M0:", net.enabled_transitions(m))

# Fire one: the west-east group goes green, consuming the Safe token.
m_green = net.fire(m, "RtoG_we")
print("\nAfter RtoG_we:", dict(m_green.tokens))
print("Enabled now:", net.enabled_transitions(m_green))

# Back to all-red; the Safe token returns.
m_back = net.fire(m_green, "GtoR_we")
print("After GtoR_we equals M0:", m_back == m)

# Exhaustive reachability: five markings (all-red plus one per green group),
# eight edges, one-safe, no deadlocks.
graph = reachability(net, node_bound=1000)
print("\nReachable markings:", len(graph.nodes))
print("Edges:", len(graph.edges))
print("1-safe:", graph.one_safe)
print("Deadlock-free:", graph.deadlock_free)

# Every reachable marking keeps the mutual-exclusion invariant:
# the number of green tokens plus the Safe token is exactly one.
greens = [p for p in net.places if p.startswith("Green_")]
for node in graph.nodes:
    assert sum(node.tokens[p] for p in greens) + node.tokens["Safe"] == 1
print("Invariant Greens + Safe = 1 holds on all reachable markings")

# Nets round-trip through a small JSON format.
print("\nJSON serialization (first 120 chars):")
print(serialize_net(net)[:120] + "...")
