import logging
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ioc2regex.normalize import (
    ClassificationError,
    IocKind,
    TokenizationError,
    classify,
    make_record,
    preprocess,
    segment,
)

from conftest import FIG1_SCHTASKS


class TestClassify:
    def test_registry_key(self, store):
        raw = r"HKCU\Software\Microsoft\Windows\CurrentVersion\Run"
        assert classify(raw, store) is IocKind.REGISTRY_KEY

    def test_registry_full_root(self, store):
        assert classify(r"HKEY_LOCAL_MACHINE\System", store) is IocKind.REGISTRY_KEY

    def test_file_path(self, store):
        assert classify(r"C:\Users\Public\11.bat", store) is IocKind.FILE_PATH

    def test_command_line(self, store):
        assert classify(FIG1_SCHTASKS, store) is IocKind.COMMAND_LINE

    def test_command_by_option_tokens_without_store(self):
        assert classify("unknowntool /x /y target") is IocKind.COMMAND_LINE

    def test_command_by_store_known_first_token(self, store):
        # no option-style tokens at all; only the store identifies it
        assert classify("wevtutil cl System", store) is IocKind.COMMAND_LINE

    def test_hash_is_other(self, store):
        assert classify("d41d8cd98f00b204e9800998ecf8427e", store) is IocKind.OTHER

    def test_relative_path_two_components(self, store):
        assert classify("Users/Public", store) is IocKind.FILE_PATH

    def test_env_var_path(self, store):
        assert classify(r"%TEMP%\payload.exe", store) is IocKind.FILE_PATH

    def test_empty_raises(self, store):
        with pytest.raises(ClassificationError):
            classify("   ", store)

    @given(st.text(min_size=1, max_size=80))
    @settings(max_examples=200)
    def test_total_and_deterministic(self, raw):
        try:
            first = classify(raw)
        except ClassificationError:
            assert not raw.strip()
            return
        assert first is classify(raw)
        assert isinstance(first, IocKind)


class TestPreprocess:
    def test_env_expansion(self, store):
        out = preprocess(r"%USERPROFILE%\a.dll", IocKind.FILE_PATH, store)
        assert out == r"C:\Users\user\a.dll"

    def test_unknown_env_var_left_verbatim(self, store, caplog):
        with caplog.at_level(logging.WARNING, logger="ioc2regex.normalize"):
            out = preprocess(r"%NOSUCHVAR%\x.exe", IocKind.FILE_PATH, store)
        assert out == r"%NOSUCHVAR%\x.exe"
        assert any("NOSUCHVAR" in rec.message for rec in caplog.records)

    def test_registry_root_abbreviation(self, store):
        out = preprocess(r"HKEY_CURRENT_USER\Software", IocKind.REGISTRY_KEY, store)
        assert out == r"HKCU\Software"

    @pytest.mark.parametrize(
        "full,abbr",
        [
            ("HKEY_CURRENT_USER", "HKCU"),
            ("HKEY_LOCAL_MACHINE", "HKLM"),
            ("HKEY_CLASSES_ROOT", "HKCR"),
            ("HKEY_USERS", "HKU"),
            ("HKEY_CURRENT_CONFIG", "HKCC"),
        ],
    )
    def test_all_five_roots(self, store, full, abbr):
        out = preprocess(full + r"\Sub", IocKind.REGISTRY_KEY, store)
        assert out == abbr + r"\Sub"
        # identity on already-abbreviated forms
        assert preprocess(out, IocKind.REGISTRY_KEY, store) == out

    def test_bare_registry_prefix_dropped(self, store):
        out = preprocess(r"REGISTRY\MACHINE\Software", IocKind.REGISTRY_KEY, store)
        assert out == r"MACHINE\Software"

    def test_command_extension_stripped(self, store):
        out = preprocess("cmd.exe /c whoami", IocKind.COMMAND_LINE, store)
        assert out == "cmd /c whoami"

    def test_payload_extension_untouched(self, store):
        out = preprocess("cmd /c 11.bat", IocKind.COMMAND_LINE, store)
        assert out == "cmd /c 11.bat"

    def test_username_normalized(self, store):
        out = preprocess(r"C:\Users\kmitnick\Desktop\a.doc", IocKind.FILE_PATH, store)
        assert out == r"C:\Users\user\Desktop\a.doc"

    def test_native_users_children_untouched(self, store):
        for child in ("Public", "Default", "user"):
            raw = rf"C:\Users\{child}\x.exe"
            assert preprocess(raw, IocKind.FILE_PATH, store) == raw

    def test_placeholder_username_component(self, store):
        out = preprocess(r"C:\Users\<username>\AppData", IocKind.FILE_PATH, store)
        assert out == r"C:\Users\user\AppData"

    def test_username_inside_command_path_argument(self, store):
        out = preprocess(
            r'schtasks /tr "c:\users\jsmith\go.bat" /f', IocKind.COMMAND_LINE, store
        )
        assert out == r'schtasks /tr "c:\users\user\go.bat" /f'

    def test_other_kind_rejected(self, store):
        with pytest.raises(ValueError):
            preprocess("abc", IocKind.OTHER, store)

    def test_idempotent_on_fuzz_corpus(self, store):
        rng = random.Random(7)
        drives = ["C:", "D:", "%USERPROFILE%", "%TEMP%", "%APPDATA%", "%UNKNOWN%"]
        dirs = ["Users", "pam", "Public", "Windows", "System32", "Temp", "<username>"]
        names = ["a.exe", "11.bat", "x.dll", "notes.txt"]
        commands = ["cmd.exe", "schtasks", "curl.exe", "unknown.exe"]
        flags = ["/c", "/create", "--get", "-x", "/f"]
        for _ in range(250):
            kind = rng.choice(
                [IocKind.FILE_PATH, IocKind.REGISTRY_KEY, IocKind.COMMAND_LINE]
            )
            if kind is IocKind.FILE_PATH:
                raw = "\\".join(
                    [rng.choice(drives)]
                    + rng.sample(dirs, rng.randint(1, 3))
                    + [rng.choice(names)]
                )
            elif kind is IocKind.REGISTRY_KEY:
                raw = "\\".join(
                    [rng.choice(["HKEY_CURRENT_USER", "HKCU", "REGISTRY"])]
                    + rng.sample(dirs, rng.randint(1, 3))
                )
            else:
                raw = " ".join(
                    [rng.choice(commands)]
                    + rng.sample(flags, rng.randint(0, 3))
                    + [rng.choice(names)]
                )
            once = preprocess(raw, kind, store)
            assert preprocess(once, kind, store) == once, raw


class TestSegment:
    def test_path_worked_example(self):
        assert segment(r"C:\Users\Public\11.bat", IocKind.FILE_PATH) == [
            "C:",
            "Users",
            "Public",
            "11.bat",
        ]

    def test_single_component(self):
        assert segment("a", IocKind.FILE_PATH) == ["a"]

    def test_schtasks_tokens(self, store):
        normalized = preprocess(FIG1_SCHTASKS, IocKind.COMMAND_LINE, store)
        components = segment(normalized, IocKind.COMMAND_LINE)
        assert components[:3] == ["schtasks", "/create", "/s"]
        assert "<remote_host>" in components
        assert "<username>" in components  # quotes stripped
        assert "SYSTEM" in components
        assert r"c:\users\public\11.bat" in components

    def test_mixed_delimiters_collapse(self):
        assert segment("a//b\\\\c", IocKind.FILE_PATH) == ["a", "b", "c"]

    def test_semicolon_delimiter(self):
        assert segment("cmd /c whoami;hostname", IocKind.COMMAND_LINE) == [
            "cmd",
            "/c",
            "whoami",
            "hostname",
        ]

    def test_quoted_span_kept_whole(self):
        assert segment('run "a b;c" end', IocKind.COMMAND_LINE) == [
            "run",
            "a b;c",
            "end",
        ]

    def test_unterminated_quote_errors_with_offset(self):
        with pytest.raises(TokenizationError) as err:
            segment('cmd /c "broken', IocKind.COMMAND_LINE)
        assert err.value.offset == 7

    @given(st.lists(st.text(st.characters(exclude_characters='\\/"'), min_size=1), min_size=1, max_size=6))
    @settings(max_examples=100)
    def test_path_reconstruction(self, parts):
        parts = [p for p in (q.strip("\\/") for q in parts) if p]
        if not parts:
            return
        normalized = "\\".join(parts)
        components = segment(normalized, IocKind.FILE_PATH)
        assert all(components)
        assert "\\".join(components) == normalized

    def test_no_empty_components(self):
        assert segment(";;  ;", IocKind.COMMAND_LINE) == []
        assert segment("\\\\", IocKind.FILE_PATH) == []


class TestMakeRecord:
    def test_other_has_no_components(self, store):
        rec = make_record("d41d8cd98f00b204e9800998ecf8427e", store)
        assert rec.kind is IocKind.OTHER
        assert rec.components == []

    def test_roundtrip_fields(self, store):
        rec = make_record(r"C:\Users\Public\11.bat", store, source_id="x1")
        assert rec.source_id == "x1"
        assert rec.kind is IocKind.FILE_PATH
        assert rec.normalized == r"C:\Users\Public\11.bat"
        assert rec.components == ["C:", "Users", "Public", "11.bat"]
