"""Run a miniature benchmark grid and print the summary table."""
from precis.bench import expand_grid, run_grid

grid = {
    "models": ["m1", "m3"],
    "p": [12],
    "n": [200, 800],
    "scenarios": ["sqrt-lasso", "oracle"],
    "replications": 5,
    "base_seed": 0,
}
configs = expand_grid(grid)
print(len(configs), "configurations")

results, text, csv_text = run_grid(configs)
print(text)

# every cell is reproducible from (base_seed, model, p, n, replication)
for res in results:
    if res.flags:
        print(res.config["model"], res.flags)
