"""Independent reference for the SplitMix64 / xoshiro256** generators.

Prints the values frozen into tests/test_rng.cpp.
"""
M = (1 << 64) - 1


def splitmix64(state):
    while True:
        state = (state + 0x9E3779B97F4A7C15) & M
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
        yield z ^ (z >> 31)


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M


def xoshiro256ss(s):
    s = list(s)
    while True:
        result = (rotl((s[1] * 5) & M, 7) * 9) & M
        t = (s[1] << 17) & M
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        yield result


g = splitmix64(1234567)
print("splitmix64(1234567):", [next(g) for _ in range(5)])
g = xoshiro256ss([1, 2, 3, 4])
print("xoshiro256**{1,2,3,4}:", [next(g) for _ in range(6)])
sm = splitmix64(42)
state = [next(sm) for _ in range(4)]
g = xoshiro256ss(state)
print("xoshiro256** seeded(42):", [hex(next(g)) for _ in range(3)])


def fnv1a64(name):
    h = 0xCBF29CE484222325
    for b in name.encode():
        h = ((h ^ b) * 0x100000001B3) & M
    return h


def substream(seed, name):
    sm = splitmix64(seed ^ fnv1a64(name))
    sub_seed = next(sm)
    sm2 = splitmix64(sub_seed)
    return xoshiro256ss([next(sm2) for _ in range(4)])


# First reference pillar-encoder weights (seed 0): uniform in [-1, 1), as float32.
import struct

g = substream(0, "pillar_encoder")
w = []
for _ in range(4):
    u = (next(g) >> 11) * 2.0**-53
    w.append(struct.unpack("<f", struct.pack("<f", -1.0 + 2.0 * u))[0])
print("pillar_encoder(seed 0) first weights:", [repr(x) for x in w])
