import io

import numpy as np
import pytest

from tilemesh.box import Box
from tilemesh.fab import FArrayBox, copy_region


def linear_field(fab: FArrayBox, box: Box, c: int = 0) -> None:
    for k in range(box.lo[2], box.hi[2] + 1):
        for j in range(box.lo[1], box.hi[1] + 1):
            for i in range(box.lo[0], box.hi[0] + 1):
                fab.set_at(i, j, k, i + 10 * j + 100 * k, c)


class TestOffsets:
    def test_formula(self):
        fab = FArrayBox(Box((0, 0, 0), (3, 3, 3)), ncomp=2)
        assert fab.offset(1, 2, 3, 1) == 1 + 4 * (2 + 4 * (3 + 4 * 1))
        assert fab.offset(1, 2, 3, 1) == 121

    def test_corners(self):
        fab = FArrayBox(Box((-1, -2, -3), (2, 1, 0)), ncomp=3)
        assert fab.offset(*fab.abox.lo, 0) == 0
        assert fab.offset(*fab.abox.hi, fab.ncomp - 1) == fab.flat.size - 1

    def test_out_of_range(self):
        fab = FArrayBox(Box((0, 0, 0), (3, 3, 3)))
        with pytest.raises(IndexError):
            fab.at(4, 0, 0)
        with pytest.raises(IndexError):
            fab.at(0, 0, 0, 1)

    def test_roundtrip_random(self):
        rng = np.random.default_rng(7)
        fab = FArrayBox(Box((-2, 0, 3), (4, 5, 6)), ncomp=2)
        for _ in range(200):
            i = rng.integers(-2, 5)
            j = rng.integers(0, 6)
            k = rng.integers(3, 7)
            c = rng.integers(0, 2)
            v = float(rng.random())
            fab.set_at(i, j, k, v, c)
            assert fab.at(i, j, k, c) == v
            assert fab.flat[fab.offset(i, j, k, c)] == v

    def test_x_fastest_layout(self):
        fab = FArrayBox(Box((0, 0, 0), (2, 2, 2)))
        offsets = [
            fab.offset(i, j, k)
            for k in range(3)
            for j in range(3)
            for i in range(3)
        ]
        assert offsets == list(range(27))


class TestFill:
    def test_whole_box(self):
        fab = FArrayBox(Box((0, 0, 0), (3, 3, 3)), ncomp=2)
        fab.fill(0.0)
        assert np.all(fab.flat == 0.0)

    def test_subbox_leaves_rest(self):
        fab = FArrayBox(Box((0, 0, 0), (3, 3, 3)))
        fab.fill(1.0)
        fab.fill(7.0, Box((1, 1, 1), (2, 2, 2)))
        assert fab.at(2, 2, 2) == 7.0
        assert fab.at(0, 0, 0) == 1.0

    def test_region_outside_errors(self):
        fab = FArrayBox(Box((0, 0, 0), (3, 3, 3)))
        with pytest.raises(ValueError):
            fab.fill(0.0, Box((0, 0, 0), (4, 3, 3)))


class TestCopyRegion:
    def test_self_identity(self):
        fab = FArrayBox(Box((0, 0, 0), (3, 3, 3)))
        linear_field(fab, fab.abox)
        before = fab.flat.copy()
        copy_region(fab, fab.abox, fab, fab.abox)
        assert np.array_equal(fab.flat, before)

    def test_shifted_copy(self):
        src = FArrayBox(Box((0, 0, 0), (1, 1, 1)))
        linear_field(src, src.abox)
        dst = FArrayBox(Box((4, 4, 4), (5, 5, 5)))
        copy_region(dst, dst.abox, src, src.abox)
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    assert dst.at(4 + a, 4 + b, 4 + c) == a + 10 * b + 100 * c

    def test_nc_zero_is_noop(self):
        src = FArrayBox(Box((0, 0, 0), (1, 1, 1)))
        src.fill(5.0)
        dst = FArrayBox(Box((0, 0, 0), (1, 1, 1)))
        copy_region(dst, dst.abox, src, src.abox, 0, 0)
        assert np.all(dst.flat == 0.0)

    def test_extent_mismatch(self):
        src = FArrayBox(Box((0, 0, 0), (1, 1, 1)))
        dst = FArrayBox(Box((0, 0, 0), (2, 2, 2)))
        with pytest.raises(ValueError):
            copy_region(dst, dst.abox, src, src.abox)

    def test_against_loop_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            slo = tuple(rng.integers(-3, 2, 3))
            ext = tuple(rng.integers(0, 4, 3))
            sbox = Box(slo, tuple(l + e for l, e in zip(slo, ext)))
            dlo = tuple(rng.integers(-3, 2, 3))
            dbox = Box(dlo, tuple(l + e for l, e in zip(dlo, ext)))
            src = FArrayBox(sbox, ncomp=2)
            src.flat[:] = rng.random(src.flat.size)
            dst = FArrayBox(dbox, ncomp=2)
            expect = FArrayBox(dbox, ncomp=2)
            for c in range(2):
                for k in range(ext[2] + 1):
                    for j in range(ext[1] + 1):
                        for i in range(ext[0] + 1):
                            expect.set_at(
                                dlo[0] + i, dlo[1] + j, dlo[2] + k,
                                src.at(slo[0] + i, slo[1] + j, slo[2] + k, c), c,
                            )
            copy_region(dst, dbox, src, sbox)
            assert np.array_equal(dst.flat, expect.flat)


class TestBinaryDump:
    def test_roundtrip(self):
        fab = FArrayBox(Box((-1, -1, -1), (4, 3, 2)), ncomp=3)
        fab.flat[:] = np.random.default_rng(0).random(fab.flat.size)
        buf = io.BytesIO()
        fab.write(buf)
        buf.seek(0)
        back = FArrayBox.read(buf)
        assert back.abox == fab.abox
        assert back.ncomp == fab.ncomp
        assert np.array_equal(back.flat, fab.flat)
