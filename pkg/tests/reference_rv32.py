"""Independent minimal RV32IMC reference interpreter (the differential oracle).

Written directly against the ISA manual's encoding tables, deliberately sharing no
code or structure with the package under test: flat bytearray memory, plain list
registers, decode and execute fused in one function. Supports exactly the surface
the simulated core supports: RV32I computation, M, C, EBREAK/ECALL as halts.
"""


class Halt(Exception):
    def __init__(self, reason):
        self.reason = reason


class RefCpu:
    def __init__(self, mem_size=0x8000):
        self.mem = bytearray(mem_size)
        self.x = [0] * 32
        self.pc = 0

    def load(self, addr, data):
        self.mem[addr : addr + len(data)] = data

    def _r8(self, a):
        return self.mem[a]

    def _r16(self, a):
        return self.mem[a] | (self.mem[a + 1] << 8)

    def _r32(self, a):
        return int.from_bytes(self.mem[a : a + 4], "little")

    def _w8(self, a, v):
        self.mem[a] = v & 0xFF

    def _w16(self, a, v):
        self.mem[a : a + 2] = (v & 0xFFFF).to_bytes(2, "little")

    def _w32(self, a, v):
        self.mem[a : a + 4] = (v & 0xFFFFFFFF).to_bytes(4, "little")

    def _set(self, rd, v):
        if rd:
            self.x[rd] = v & 0xFFFFFFFF

    @staticmethod
    def _sgn(v):
        return v - 0x100000000 if v & 0x80000000 else v

    def step(self):
        pc = self.pc
        half = self._r16(pc)
        if half & 3 == 3:
            self._step32(self._r16(pc) | (self._r16(pc + 2) << 16), pc)
        else:
            self._step16(half, pc)

    # -- 32-bit encodings ---------------------------------------------------

    def _step32(self, w, pc):
        opc = w & 0x7F
        rd = (w >> 7) & 31
        f3 = (w >> 12) & 7
        rs1 = (w >> 15) & 31
        rs2 = (w >> 20) & 31
        f7 = (w >> 25) & 0x7F
        a = self.x[rs1]
        b = self.x[rs2]
        sa = self._sgn(a)
        sb = self._sgn(b)
        imm_i = (w >> 20) | (0xFFFFF000 if w >> 31 else 0)
        simm_i = self._sgn(imm_i)
        next_pc = pc + 4

        if opc == 0x37:
            self._set(rd, w & 0xFFFFF000)
        elif opc == 0x17:
            self._set(rd, pc + (w & 0xFFFFF000))
        elif opc == 0x6F:
            off = (
                (((w >> 21) & 0x3FF) << 1)
                | (((w >> 20) & 1) << 11)
                | (((w >> 12) & 0xFF) << 12)
                | ((w >> 31) << 20)
            )
            if off & 0x100000:
                off -= 0x200000
            self._set(rd, pc + 4)
            next_pc = (pc + off) & 0xFFFFFFFF
        elif opc == 0x67:
            self._set(rd, pc + 4)
            next_pc = (a + simm_i) & 0xFFFFFFFE
        elif opc == 0x63:
            off = (
                (((w >> 8) & 0xF) << 1)
                | (((w >> 25) & 0x3F) << 5)
                | (((w >> 7) & 1) << 11)
                | ((w >> 31) << 12)
            )
            if off & 0x1000:
                off -= 0x2000
            take = {
                0: a == b,
                1: a != b,
                4: sa < sb,
                5: sa >= sb,
                6: a < b,
                7: a >= b,
            }[f3]
            if take:
                next_pc = (pc + off) & 0xFFFFFFFF
        elif opc == 0x03:
            addr = (a + simm_i) & 0xFFFFFFFF
            if f3 == 0:
                v = self._r8(addr)
                self._set(rd, v - 0x100 if v & 0x80 else v)
            elif f3 == 1:
                v = self._r16(addr)
                self._set(rd, v - 0x10000 if v & 0x8000 else v)
            elif f3 == 2:
                self._set(rd, self._r32(addr))
            elif f3 == 4:
                self._set(rd, self._r8(addr))
            elif f3 == 5:
                self._set(rd, self._r16(addr))
            else:
                raise Halt(f"illegal 0x{w:08x}")
        elif opc == 0x23:
            off = ((w >> 7) & 31) | (((w >> 25) & 0x7F) << 5)
            if off & 0x800:
                off -= 0x1000
            addr = (a + off) & 0xFFFFFFFF
            if f3 == 0:
                self._w8(addr, b)
            elif f3 == 1:
                self._w16(addr, b)
            elif f3 == 2:
                self._w32(addr, b)
            else:
                raise Halt(f"illegal 0x{w:08x}")
        elif opc == 0x13:
            sh = rs2
            out = {
                0: a + simm_i,
                1: a << sh,
                2: int(sa < simm_i),
                3: int(a < imm_i),
                4: a ^ imm_i,
                5: (a >> sh) if not (w >> 30) & 1 else (sa >> sh),
                6: a | imm_i,
                7: a & imm_i,
            }[f3]
            self._set(rd, out)
        elif opc == 0x33 and f7 == 1:
            if f3 == 0:
                out = a * b
            elif f3 == 1:
                out = (sa * sb) >> 32
            elif f3 == 2:
                out = (sa * b) >> 32
            elif f3 == 3:
                out = (a * b) >> 32
            elif f3 == 4:
                if b == 0:
                    out = 0xFFFFFFFF
                elif a == 0x80000000 and sb == -1:
                    out = 0x80000000
                else:
                    q = abs(sa) // abs(sb)
                    out = -q if (sa < 0) != (sb < 0) else q
            elif f3 == 5:
                out = 0xFFFFFFFF if b == 0 else a // b
            elif f3 == 6:
                if b == 0:
                    out = sa
                elif a == 0x80000000 and sb == -1:
                    out = 0
                else:
                    m = abs(sa) % abs(sb)
                    out = -m if sa < 0 else m
            else:
                out = a if b == 0 else a % b
            self._set(rd, out)
        elif opc == 0x33:
            sh = b & 31
            out = {
                0: a - b if f7 else a + b,
                1: a << sh,
                2: int(sa < sb),
                3: int(a < b),
                4: a ^ b,
                5: (sa >> sh) if f7 else (a >> sh),
                6: a | b,
                7: a & b,
            }[f3]
            self._set(rd, out)
        elif opc == 0x0F:
            pass  # fence
        elif opc == 0x73 and w == 0x00100073:
            raise Halt("ebreak")
        elif opc == 0x73 and w == 0x00000073:
            raise Halt("ecall")
        else:
            raise Halt(f"illegal 0x{w:08x}")
        self.pc = next_pc & 0xFFFFFFFF

    # -- compressed encodings -----------------------------------------------

    def _step16(self, w, pc):
        q = w & 3
        f3 = w >> 13
        next_pc = pc + 2
        if q == 0:
            rdp = 8 + ((w >> 2) & 7)
            rs1p = 8 + ((w >> 7) & 7)
            if f3 == 0:
                u = (
                    (((w >> 5) & 1) << 3)
                    | (((w >> 6) & 1) << 2)
                    | (((w >> 7) & 0xF) << 6)
                    | (((w >> 11) & 3) << 4)
                )
                if u == 0:
                    raise Halt(f"illegal 0x{w:04x}")
                self._set(rdp, self.x[2] + u)
            elif f3 == 2:
                u = (((w >> 6) & 1) << 2) | (((w >> 10) & 7) << 3) | (((w >> 5) & 1) << 6)
                self._set(rdp, self._r32((self.x[rs1p] + u) & 0xFFFFFFFF))
            elif f3 == 6:
                u = (((w >> 6) & 1) << 2) | (((w >> 10) & 7) << 3) | (((w >> 5) & 1) << 6)
                self._w32((self.x[rs1p] + u) & 0xFFFFFFFF, self.x[rdp])
            else:
                raise Halt(f"illegal 0x{w:04x}")
        elif q == 1:
            r = (w >> 7) & 31
            rp = 8 + ((w >> 7) & 7)
            imm6 = ((w >> 2) & 31) | (((w >> 12) & 1) << 5)
            if imm6 & 0x20:
                imm6 -= 64
            if f3 == 0:
                self._set(r, self.x[r] + imm6)
            elif f3 in (1, 5):
                off = (
                    (((w >> 3) & 7) << 1)
                    | (((w >> 11) & 1) << 4)
                    | (((w >> 2) & 1) << 5)
                    | (((w >> 7) & 1) << 6)
                    | (((w >> 6) & 1) << 7)
                    | (((w >> 9) & 3) << 8)
                    | (((w >> 8) & 1) << 10)
                    | (((w >> 12) & 1) << 11)
                )
                if off & 0x800:
                    off -= 0x1000
                if f3 == 1:
                    self._set(1, pc + 2)
                next_pc = (pc + off) & 0xFFFFFFFF
            elif f3 == 2:
                self._set(r, imm6)
            elif f3 == 3:
                if r == 2:
                    n = (
                        (((w >> 6) & 1) << 4)
                        | (((w >> 2) & 1) << 5)
                        | (((w >> 5) & 1) << 6)
                        | (((w >> 3) & 3) << 7)
                        | (((w >> 12) & 1) << 9)
                    )
                    if n & 0x200:
                        n -= 0x400
                    if n == 0:
                        raise Halt(f"illegal 0x{w:04x}")
                    self._set(2, self.x[2] + n)
                else:
                    n = imm6 << 12
                    if n == 0:
                        raise Halt(f"illegal 0x{w:04x}")
                    self._set(r, n)
            elif f3 == 4:
                kind = (w >> 10) & 3
                if kind == 0:
                    if (w >> 12) & 1:
                        raise Halt(f"illegal 0x{w:04x}")
                    self._set(rp, self.x[rp] >> ((w >> 2) & 31))
                elif kind == 1:
                    if (w >> 12) & 1:
                        raise Halt(f"illegal 0x{w:04x}")
                    self._set(rp, self._sgn(self.x[rp]) >> ((w >> 2) & 31))
                elif kind == 2:
                    self._set(rp, self.x[rp] & (imm6 & 0xFFFFFFFF))
                else:
                    if (w >> 12) & 1:
                        raise Halt(f"illegal 0x{w:04x}")
                    rs2p = 8 + ((w >> 2) & 7)
                    op2 = (w >> 5) & 3
                    va, vb = self.x[rp], self.x[rs2p]
                    out = (va - vb, va ^ vb, va | vb, va & vb)[op2]
                    self._set(rp, out)
            else:  # c.beqz / c.bnez
                off = (
                    (((w >> 3) & 3) << 1)
                    | (((w >> 10) & 3) << 3)
                    | (((w >> 2) & 1) << 5)
                    | (((w >> 5) & 3) << 6)
                    | (((w >> 12) & 1) << 8)
                )
                if off & 0x100:
                    off -= 0x200
                zero = self.x[rp] == 0
                if (f3 == 6 and zero) or (f3 == 7 and not zero):
                    next_pc = (pc + off) & 0xFFFFFFFF
        else:  # q == 2
            r = (w >> 7) & 31
            rs2 = (w >> 2) & 31
            if f3 == 0:
                if (w >> 12) & 1:
                    raise Halt(f"illegal 0x{w:04x}")
                self._set(r, self.x[r] << ((w >> 2) & 31))
            elif f3 == 2:
                if r == 0:
                    raise Halt(f"illegal 0x{w:04x}")
                u = (((w >> 4) & 7) << 2) | (((w >> 12) & 1) << 5) | (((w >> 2) & 3) << 6)
                self._set(r, self._r32((self.x[2] + u) & 0xFFFFFFFF))
            elif f3 == 4:
                hi = (w >> 12) & 1
                if not hi:
                    if rs2 == 0:
                        if r == 0:
                            raise Halt(f"illegal 0x{w:04x}")
                        next_pc = self.x[r] & 0xFFFFFFFE
                    else:
                        self._set(r, self.x[rs2])
                else:
                    if rs2 == 0 and r == 0:
                        raise Halt("ebreak")
                    if rs2 == 0:
                        t = self.x[r] & 0xFFFFFFFE
                        self._set(1, pc + 2)
                        next_pc = t
                    else:
                        self._set(r, self.x[r] + self.x[rs2])
            elif f3 == 6:
                u = (((w >> 9) & 0xF) << 2) | (((w >> 7) & 3) << 6)
                self._w32((self.x[2] + u) & 0xFFFFFFFF, self.x[rs2])
            else:
                raise Halt(f"illegal 0x{w:04x}")
        self.pc = next_pc & 0xFFFFFFFF

    def run(self, max_steps=100_000):
        for _ in range(max_steps):
            try:
                self.step()
            except Halt as h:
                return h.reason
        raise AssertionError("reference interpreter did not halt")
