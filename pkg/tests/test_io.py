import numpy as np
import pytest

from fofkit.errors import (BadMagicError, CrcMismatchError, ImageFormatError,
                           ShapeError, TruncatedPayloadError, UnsupportedVersionError)
from fofkit.tensor_io import (crc64, read_pfm, read_pgm, read_png16, read_ppm,
                              read_tensor, write_pfm, write_pgm, write_png16,
                              write_ppm, write_tensor)


class TestCrc64:
    def test_check_value(self):
        # standard CRC-64/XZ check ("123456789")
        assert crc64(b"123456789") == 0x995DC9BBDF1939FA

    def test_empty(self):
        assert crc64(b"") == 0

    def test_sensitivity(self):
        assert crc64(b"abc") != crc64(b"abd")


class TestTensorContainer:
    def test_roundtrip_zeros(self, tmp_path):
        path = tmp_path / "z.oaht"
        write_tensor(path, np.zeros((2, 3), dtype=np.float32))
        dims, back = read_tensor(path)
        assert dims == (2, 3)
        assert not back.any()
        # writing the same tensor twice is byte-identical
        path2 = tmp_path / "z2.oaht"
        write_tensor(path2, np.zeros((2, 3), dtype=np.float32))
        assert path.read_bytes() == path2.read_bytes()

    def test_field_roundtrip_f32_precision(self, tmp_path, rng):
        arr = rng.normal(size=(128, 128, 31))
        path = tmp_path / "f.oaht"
        write_tensor(path, arr)
        dims, back = read_tensor(path)
        assert dims == (128, 128, 31)
        assert np.array_equal(back, arr.astype(np.float32))

    def test_payload_corruption_rejected(self, tmp_path):
        path = tmp_path / "c.oaht"
        write_tensor(path, np.ones((4, 4), dtype=np.float32))
        blob = bytearray(path.read_bytes())
        blob[8 + 16 + 5] ^= 0x01  # inside the payload
        path.write_bytes(bytes(blob))
        with pytest.raises(CrcMismatchError):
            read_tensor(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.oaht"
        write_tensor(path, np.ones(3, dtype=np.float32))
        blob = bytearray(path.read_bytes())
        blob[0] = ord("X")
        path.write_bytes(bytes(blob))
        with pytest.raises(BadMagicError):
            read_tensor(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v.oaht"
        write_tensor(path, np.ones(3, dtype=np.float32))
        blob = bytearray(path.read_bytes())
        blob[4] = 9
        path.write_bytes(bytes(blob))
        with pytest.raises(UnsupportedVersionError):
            read_tensor(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "t.oaht"
        write_tensor(path, np.ones((10, 10), dtype=np.float32))
        blob = path.read_bytes()
        path.write_bytes(blob[:-20])
        with pytest.raises(TruncatedPayloadError):
            read_tensor(path)

    def test_dims_mismatch_on_write(self, tmp_path):
        with pytest.raises(ShapeError):
            write_tensor(tmp_path / "d.oaht", np.ones(6), dims=(2, 2))


class TestPfm:
    def test_roundtrip_exact(self, tmp_path, rng):
        img = rng.normal(size=(2, 2, 3)).astype(np.float32).astype(np.float64)
        path = tmp_path / "t.pfm"
        write_pfm(path, img)
        assert np.array_equal(read_pfm(path), img)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "h.pfm"
        write_pfm(path, np.zeros((3, 5, 3)))
        assert path.read_bytes().startswith(b"PF\n5 3\n-1.0\n")

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "bad.pfm"
        path.write_bytes(b"Pf\n2 2\n-1.0\n" + b"\x00" * 16)
        with pytest.raises(ImageFormatError):
            read_pfm(path)

    def test_truncated_rejected(self, tmp_path):
        path = tmp_path / "short.pfm"
        path.write_bytes(b"PF\n4 4\n-1.0\n" + b"\x00" * 10)
        with pytest.raises(ImageFormatError):
            read_pfm(path)


class TestPgmPpm:
    def test_pgm_roundtrip(self, tmp_path, rng):
        mask = rng.random((6, 9)) > 0.4
        path = tmp_path / "m.pgm"
        write_pgm(path, mask)
        assert np.array_equal(read_pgm(path), mask)

    def test_ppm_roundtrip_8bit(self, tmp_path):
        img = np.linspace(0, 1, 4 * 5 * 3).reshape(4, 5, 3)
        path = tmp_path / "i.ppm"
        write_ppm(path, img)
        back = read_ppm(path)
        assert np.max(np.abs(back - img)) <= 0.5 / 255 + 1e-12

    def test_pgm_malformed(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n3 3\n65535\n" + b"\x00" * 9)
        with pytest.raises(ImageFormatError):
            read_pgm(path)


class TestPng16:
    def test_quantization_bound(self, tmp_path, rng):
        normals = rng.normal(size=(6, 7, 3))
        normals /= np.linalg.norm(normals, axis=2, keepdims=True)
        path = tmp_path / "n.png"
        write_png16(path, normals)
        back = read_png16(path)
        assert np.max(np.abs(back - normals)) <= 2.0 / 65535

    def test_rejects_bad_signature(self, tmp_path):
        path = tmp_path / "bad.png"
        path.write_bytes(b"NOTAPNG0" + b"\x00" * 16)
        with pytest.raises(ImageFormatError):
            read_png16(path)

    def test_rejects_chunk_crc(self, tmp_path, rng):
        normals = np.zeros((3, 3, 3))
        path = tmp_path / "c.png"
        write_png16(path, normals)
        blob = bytearray(path.read_bytes())
        blob[-10] ^= 0xFF  # inside IEND/IDAT body or CRC
        path.write_bytes(bytes(blob))
        with pytest.raises(ImageFormatError):
            read_png16(path)
