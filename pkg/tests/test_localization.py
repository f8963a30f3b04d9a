#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试本地化功能
"""

import os
import sys

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from chaos_trng.core import localization
from chaos_trng.core.localization import Localization


def test_english_is_default():
    loc = Localization()
    assert loc.get_current_language() == "en"
    assert loc.t("cli.suite_pass") == "suite verdict: PASS"


def test_chinese_localization():
    """测试中文本地化是否正常工作"""
    loc = Localization("zh_CN")
    assert loc.get_current_language() == "zh_CN"
    assert loc.t("cli.suite_fail") == "检验结论：未通过"
    assert loc.t("cli.bits_written", count=16, path="out.bin") == "已写入 16 个比特到 out.bin"


def test_missing_language_falls_back_to_english():
    loc = Localization("xx_YY")
    assert loc.get_current_language() == "en"
    assert loc.t("cli.interrupted") == "interrupted"


def test_missing_key_returns_key():
    loc = Localization("en")
    assert loc.t("cli.no_such_message") == "cli.no_such_message"
    assert loc.t("cli") != "cli"


def test_catalogues_have_same_keys():
    en = Localization("en").translations["cli"]
    zh = Localization("zh_CN").translations["cli"]
    assert set(en) == set(zh)


def test_available_languages():
    languages = Localization().get_available_languages()
    assert languages["en"] == "English"
    assert "zh_CN" in languages


def test_set_language():
    loc = Localization("en")
    assert loc.set_language("zh_CN")
    assert loc.t("cli.interrupted") == "已中断"
    assert not loc.set_language("xx_YY")
    assert loc.get_current_language() == "zh_CN"


def test_module_level_helpers():
    localization.init_localization("zh_CN")
    try:
        assert localization.get_current_language() == "zh_CN"
        assert localization.t("cli.error", message="x") == "错误：x"
    finally:
        localization.init_localization("en")
