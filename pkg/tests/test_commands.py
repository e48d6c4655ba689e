import json
import os
from tempfile import TemporaryDirectory
from typing import Callable, List

from click import Command, Group
from click.testing import Result
from stactools.testing.cli_test import CliTestCase

from corrtw.commands import create_corrtw_command
from corrtw.storage import read_csv
from tests import test_data

TABLE = "--step 0.01 --t-min -6"


class CommandsTest(CliTestCase):
    def create_subcommand_functions(self) -> List[Callable[[Group], Command]]:
        return [create_corrtw_command]

    def invoke(self, cmd: str, expect_exit: int = 0) -> Result:
        result = self.run_command(cmd)
        self.assertEqual(result.exit_code, expect_exit, result.output)
        return result

    def test_simulate(self) -> None:
        with TemporaryDirectory() as temporary_directory:
            cmd = (
                f"simulate --p 5 --n 20 --replicas 2 --seed 3 {TABLE} "
                f"-o {temporary_directory}"
            )
            self.invoke(cmd)
            frame, provenance = read_csv(
                os.path.join(temporary_directory, "replicas.csv")
            )
            with open(os.path.join(temporary_directory, "summary.json")) as f:
                summary = json.load(f)
        assert len(frame) == 2
        assert "stat_max" in frame.columns
        assert provenance["seed"] == 3
        assert provenance["config"]["replicas"] == 2
        assert summary["replicas"] == 2
        assert summary["edge"] == "largest"
        assert summary["provenance"]["seed"] == 3

    def test_outputs_do_not_depend_on_workers(self) -> None:
        with TemporaryDirectory() as temporary_directory:
            contents = []
            for workers in (1, 2):
                outdir = os.path.join(temporary_directory, f"simulate-{workers}")
                green = os.path.join(temporary_directory, f"green-{workers}.csv")
                self.invoke(
                    f"simulate --p 5 --n 20 --replicas 4 --workers {workers} "
                    f"{TABLE} -o {outdir}"
                )
                self.invoke(
                    f"green-compare --p 10 --n 40 --dist rademacher --replicas 4 "
                    f"--workers {workers} -o {green}"
                )
                paths = [os.path.join(outdir, "replicas.csv"), green]
                files = []
                for path in paths:
                    with open(path, "rb") as f:
                        files.append(f.read())
                contents.append(files)
        assert contents[0] == contents[1]

    def test_simulate_without_output(self) -> None:
        self.invoke("simulate --p 5 --n 20 --replicas 2", expect_exit=2)

    def test_tw_table_is_reproducible(self) -> None:
        with TemporaryDirectory() as temporary_directory:
            first = os.path.join(temporary_directory, "first.csv")
            second = os.path.join(temporary_directory, "second.csv")
            self.invoke(f"tw-table {TABLE} -o {first}")
            self.invoke(f"tw-table {TABLE} -o {second}")
            with open(first, "rb") as f:
                first_bytes = f.read()
            with open(second, "rb") as f:
                second_bytes = f.read()
            frame, _ = read_csv(first)
        assert first_bytes == second_bytes
        assert list(frame.columns) == ["t", "q", "F1"]
        assert len(frame) == 1401

    def test_mp_density(self) -> None:
        result = self.invoke("mp-density --y 0.25 --points 11")
        lines = [line for line in result.output.splitlines() if not line.startswith("#")]
        assert lines[0] == "x,density,cdf"
        assert len(lines) == 12

    def test_mp_density_json(self) -> None:
        result = self.invoke("mp-density --p 20 --n 80 --format json")
        document = json.loads(result.output)
        assert len(document["x"]) == 201
        assert document["y"] == 0.25
        assert document["provenance"]["config"]["p"] == 20

    def test_mp_density_invalid_ratio(self) -> None:
        self.invoke("mp-density --y 1.5", expect_exit=2)

    def test_verify(self) -> None:
        result = self.invoke("verify --instances 3")
        lines = result.output.splitlines()
        assert lines
        assert all(line.startswith("PASS ") for line in lines)

    def test_test_independence(self) -> None:
        infile = test_data.get_path("data-files/corrtw/rows.csv")
        result = self.invoke(
            f"test-independence --data {infile} --format json {TABLE}"
        )
        document = json.loads(result.output)
        assert document["p"] == 3
        assert document["n"] == 12
        assert 0 <= document["p_value"] <= 1

    def test_test_independence_bad_data(self) -> None:
        infile = test_data.get_path("data-files/corrtw/missing.csv")
        self.invoke(f"test-independence --data {infile} {TABLE}", expect_exit=1)

    def test_green_compare(self) -> None:
        with TemporaryDirectory() as temporary_directory:
            outfile = os.path.join(temporary_directory, "green.json")
            self.invoke(
                f"green-compare --p 10 --n 40 --replicas 4 --paired "
                f"--format json -o {outfile}"
            )
            with open(outfile) as f:
                document = json.load(f)
        assert len(document["values_v"]) == 4
        assert document["diff"] == 0
        assert document["provenance"]["config"]["paired"] is True

    def test_delocalize(self) -> None:
        result = self.invoke("delocalize --p 10 --n 40 --replicas 3")
        lines = [line for line in result.output.splitlines() if not line.startswith("#")]
        assert lines[0] == "replica,sup_norm"
        assert len(lines) == 4

    def test_config_file(self) -> None:
        infile = test_data.get_path("data-files/corrtw/simulate.cfg")
        with TemporaryDirectory() as temporary_directory:
            self.invoke(
                f"simulate --config {infile} --replicas 2 {TABLE} "
                f"-o {temporary_directory}"
            )
            frame, provenance = read_csv(
                os.path.join(temporary_directory, "replicas.csv")
            )
        assert len(frame) == 2
        assert provenance["config"]["dist"] == "rademacher"

    def test_bad_config(self) -> None:
        with TemporaryDirectory() as temporary_directory:
            infile = os.path.join(temporary_directory, "bad.cfg")
            with open(infile, "w") as f:
                f.write("colour = red\n")
            self.invoke(f"verify --config {infile}", expect_exit=2)
