#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
本地化模块 - 命令行提示信息的多语言切换

只翻译给人看的文字；CSV、PGM、比特文件和 --json 输出从不本地化。
"""

import os
import sys
from typing import Any, Dict, Optional

import yaml

DEFAULT_LANGUAGE = "en"
LOCALES_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "locales")


class Localization:
    """本地化类，负责加载和管理多语言翻译"""

    def __init__(self, lang: Optional[str] = None, locales_dir: str = LOCALES_DIR):
        """
        初始化本地化系统

        Args:
            lang: 语言代码，如 'zh_CN', 'en'。为 None 时使用英文
            locales_dir: 翻译文件目录
        """
        self.locales_dir = locales_dir
        self.lang = lang or DEFAULT_LANGUAGE
        self.translations: Dict[str, Any] = {}
        self._load_translations()

    def _locale_file(self, lang: str) -> str:
        return os.path.join(self.locales_dir, f"{lang}.yml")

    def _load_translations(self) -> None:
        """加载翻译文件，缺失时回退到英文"""
        locale_file = self._locale_file(self.lang)

        if not os.path.exists(locale_file):
            if self.lang != DEFAULT_LANGUAGE:
                print(f"warning: no message catalogue for '{self.lang}', using English", file=sys.stderr)
                self.lang = DEFAULT_LANGUAGE
                locale_file = self._locale_file(self.lang)
            if not os.path.exists(locale_file):
                self.translations = {}
                return

        try:
            with open(locale_file, "r", encoding="utf-8") as f:
                self.translations = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            print(f"error: cannot load message catalogue {locale_file}: {e}", file=sys.stderr)
            self.translations = {}

    def t(self, key: str, **kwargs: Any) -> str:
        """
        获取翻译文本

        Args:
            key: 翻译键，支持点号分隔的嵌套键，如 'cli.suite_pass'
            **kwargs: 格式化参数

        Returns:
            翻译后的文本；找不到时返回键名
        """
        value: Any = self.translations
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return key

        if isinstance(value, str) and kwargs:
            try:
                return value.format(**kwargs)
            except (KeyError, IndexError, ValueError):
                return value
        return str(value)

    def get_current_language(self) -> str:
        return self.lang

    def set_language(self, lang: str) -> bool:
        """
        切换语言

        Returns:
            bool: 对应的翻译文件是否存在
        """
        if not os.path.exists(self._locale_file(lang)):
            return False
        self.lang = lang
        self._load_translations()
        return True

    def get_available_languages(self) -> Dict[str, str]:
        """扫描翻译目录，返回 语言代码 -> 语言名称"""
        languages: Dict[str, str] = {}
        if not os.path.isdir(self.locales_dir):
            return languages

        for file in sorted(os.listdir(self.locales_dir)):
            if not file.endswith(".yml"):
                continue
            lang_code = file[:-4]
            try:
                with open(os.path.join(self.locales_dir, file), "r", encoding="utf-8") as f:
                    data = yaml.safe_load(f) or {}
                languages[lang_code] = data.get("meta", {}).get("name", lang_code)
            except (OSError, yaml.YAMLError):
                languages[lang_code] = lang_code
        return languages


# 全局本地化实例
_localization: Optional[Localization] = None


def _instance() -> Localization:
    global _localization
    if _localization is None:
        _localization = Localization()
    return _localization


def init_localization(lang: Optional[str] = None) -> None:
    """初始化本地化系统"""
    global _localization
    _localization = Localization(lang)


def t(key: str, **kwargs: Any) -> str:
    """获取翻译文本的便捷函数"""
    return _instance().t(key, **kwargs)


def get_current_language() -> str:
    return _instance().get_current_language()


def set_language(lang: str) -> bool:
    return _instance().set_language(lang)


def get_available_languages() -> Dict[str, str]:
    return _instance().get_available_languages()
