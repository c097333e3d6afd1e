import shutil
from pathlib import Path

import pytest

from magpie.fixtures import FIXTURES_DIR, ToyTarget, load_toy
from magpie.output import reset_logger

C_SAMPLE = (
    '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
    '<unit xmlns="http://www.srcML.org/srcML/src" revision="1.0.0" language="C" filename="main.c">'
    "<function><type><name>int</name></type> <name>main</name><parameter_list>()</parameter_list> <block>{<block_content>\n"
    "    <decl_stmt><decl><type><name>int</name></type> <name>x</name> <init>= <expr><literal type=\"number\">10</literal></expr></init></decl>;</decl_stmt>\n"
    "    <expr_stmt><expr><name>x</name> <operator>=</operator> <name>x</name> <operator>*</operator> <literal type=\"number\">2</literal></expr>;</expr_stmt>\n"
    "    <if>if <condition>(<expr><name>x</name> <operator>&gt;</operator> <literal type=\"number\">5</literal></expr>)</condition> <block>{<block_content>\n"
    "        <expr_stmt><expr><name>x</name><operator>--</operator></expr>;</expr_stmt>\n"
    "    </block_content>}</block></if>\n"
    "    <return>return <expr><name>x</name></expr>;</return>\n"
    "</block_content>}</block></function>\n"
    "</unit>\n"
)

C_SAMPLE_SOURCE = (
    "int main() {\n"
    "    int x = 10;\n"
    "    x = x * 2;\n"
    "    if (x > 5) {\n"
    "        x--;\n"
    "    }\n"
    "    return x;\n"
    "}\n"
)


@pytest.fixture(autouse=True)
def _fresh_logger(monkeypatch):
    monkeypatch.delenv("MAGPIE_WORKDIR", raising=False)
    reset_logger()
    yield
    reset_logger()


def copy_toy(name: str, dest: Path) -> ToyTarget:
    """Copy a toy into ``dest`` so its work directory stays out of the repo."""
    shutil.copytree(FIXTURES_DIR / name, Path(dest) / name, ignore=shutil.ignore_patterns("_magpie_work"))
    return load_toy(name, dest)


@pytest.fixture
def c_sample() -> str:
    return C_SAMPLE


@pytest.fixture(scope="module")
def param_knob(tmp_path_factory) -> ToyTarget:
    return copy_toy("param-knob", tmp_path_factory.mktemp("toys"))


@pytest.fixture(scope="module")
def dead_stmt(tmp_path_factory) -> ToyTarget:
    return copy_toy("dead-stmt", tmp_path_factory.mktemp("toys"))


@pytest.fixture(scope="module")
def knob_and_stmt(tmp_path_factory) -> ToyTarget:
    return copy_toy("knob-and-stmt", tmp_path_factory.mktemp("toys"))


@pytest.fixture(scope="module")
def flag_pairs(tmp_path_factory) -> ToyTarget:
    return copy_toy("flag-pairs", tmp_path_factory.mktemp("toys"))
