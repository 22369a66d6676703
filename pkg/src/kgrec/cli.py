"""Pipeline driver: ingest -> split -> train -> eval -> recommend -> report.

Artifacts are plain files in the output directory (interned graph TSV, split
manifest, embedding TSVs, an npz checkpoint for the graph-convolution model,
per-model metrics JSON and the final report) so every stage is inspectable
and diff-friendly.

Exit codes: 0 ok, 1 internal error, 2 missing/malformed input, 3 unknown
entity.
"""

from __future__ import annotations

import configparser
import json
import sys
from pathlib import Path

import click
import numpy as np

from kgrec import embeddings as emb
from kgrec import evaluation as ev
from kgrec import hpo as hpo_mod
from kgrec import rgcn as rgcn_mod
from kgrec import synth as synth_mod
from kgrec.errors import KgrecError, ParseError, UnknownEntityError
from kgrec.kg import (build_graph, load_graph, parse_tsv_triples, read_split,
                      sample_negatives, split_edges, write_graph_tsv, write_split)
from kgrec.skipgram import SkipGramConfig, train_skipgram
from kgrec.walks import (RelationWeights, WalkConfig, generate_biased_walks,
                         generate_uniform_walks)

MODELS = ("deepwalk", "brw", "hybrid", "rgcn")


def _fail(message, code):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(func):
    """Map package errors onto the documented exit codes."""
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ParseError as exc:
            _fail(str(exc), 2)
        except FileNotFoundError as exc:
            _fail(f"missing input file: {exc.filename or exc}", 2)
        except UnknownEntityError as exc:
            _fail(str(exc), 3)
        except KgrecError as exc:
            _fail(str(exc), 1)
    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


def _load_config(path):
    parser = configparser.ConfigParser()
    if path:
        if not Path(path).exists():
            raise FileNotFoundError(path)
        parser.read(path)
    return parser


def _section(config, name):
    return dict(config[name]) if config.has_section(name) else {}


def _opt(overrides, section, key, default, cast):
    """Resolution order: command-line flag, config-file section, default."""
    if overrides.get(key) is not None:
        return overrides[key]
    if key in section:
        return cast(section[key])
    return default


@click.group()
@click.option("--seed", default=0, show_default=True, help="Global random seed.")
@click.option("--out-dir", default="out", show_default=True,
              help="Directory for pipeline artifacts.")
@click.option("--config", default=None, help="INI config file; flags override it.")
@click.pass_context
def main(ctx, seed, out_dir, config):
    """Knowledge-graph embedding and recommendation-evaluation pipeline."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["out"] = Path(out_dir)
    ctx.obj["out"].mkdir(parents=True, exist_ok=True)
    ctx.obj["config"] = config


@main.command()
@click.argument("graph_file")
@click.pass_context
@_guard
def ingest(ctx, graph_file):
    """Parse a triple file (.nt or TSV), intern it, report stats."""
    if not Path(graph_file).exists():
        raise FileNotFoundError(graph_file)
    graph = load_graph(graph_file)
    write_graph_tsv(graph, ctx.obj["out"] / "graph.tsv")
    s = graph.stats()
    click.echo(f"{s['triples']} triples, {s['entities']} entities, "
               f"{s['relations']} relations")


@main.command()
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.pass_context
@_guard
def split(ctx, ratios):
    """Partition the ingested graph into train/valid/test."""
    graph = _ingested(ctx)
    parts = tuple(float(x) for x in ratios.split(","))
    result = split_edges(graph, parts, seed=ctx.obj["seed"])
    write_split(result, graph, ctx.obj["out"] / "split")
    click.echo(f"train={len(result.train)} valid={len(result.val)} "
               f"test={len(result.test)}")
    if result.uncovered:
        names = ", ".join(graph.entities[e] for e in result.uncovered)
        click.echo(f"warning: entities without a training triple: {names}", err=True)


def _ingested(ctx):
    path = ctx.obj["out"] / "graph.tsv"
    if not path.exists():
        raise FileNotFoundError(str(path))
    return build_graph(parse_tsv_triples(path.read_text(encoding="utf-8")))


def _walk_model(graph, model, seed, section, overrides, weights):
    config = WalkConfig(
        walks_per_node=int(_opt(overrides, section, "walks_per_node", 10, int)),
        walk_length=int(_opt(overrides, section, "walk_length", 40, int)),
        seed=seed,
    )
    if model == "deepwalk":
        corpus = generate_uniform_walks(graph, config)
    else:
        corpus = generate_biased_walks(graph, config, weights)
    sg = SkipGramConfig(
        dimension=int(_opt(overrides, section, "dimension", 64, int)),
        window=int(_opt(overrides, section, "window", 5, int)),
        negatives_per_pair=int(_opt(overrides, section, "negatives", 5, int)),
        epochs=int(_opt(overrides, section, "epochs", 5, int)),
        learning_rate=float(_opt(overrides, section, "learning_rate", 0.025, float)),
        seed=seed,
    )
    table = train_skipgram(corpus, sg, graph.entities)
    table.model = model
    return table


@main.command()
@click.option("--model", type=click.Choice(MODELS), required=True)
@click.option("--weights", default=None,
              help="Relation-weights TSV; required for brw and hybrid.")
@click.option("--walks-per-node", "walks_per_node", type=int, default=None)
@click.option("--walk-length", "walk_length", type=int, default=None)
@click.option("--window", type=int, default=None)
@click.option("--dimension", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--learning-rate", "learning_rate", type=float, default=None)
@click.option("--hidden-dim", "hidden_dim", type=int, default=None)
@click.option("--num-layers", "num_layers", type=int, default=None)
@click.option("--weight-decay", "weight_decay", type=float, default=None)
@click.option("--patience", type=int, default=None)
@click.pass_context
@_guard
def train(ctx, model, weights, **overrides):
    """Train one model and write its embedding TSV."""
    graph = _ingested(ctx)
    seed = ctx.obj["seed"]
    out = ctx.obj["out"]
    config = _load_config(ctx.obj["config"])
    section = _section(config, model)

    rel_weights = None
    if model in ("brw", "hybrid"):
        if weights is None and "weights" in section:
            weights = section["weights"]
        # hybrid only needs weights when it must train brw itself
        needs = model == "brw" or not (out / "brw.emb.tsv").exists()
        if weights is None and needs:
            raise KgrecError(f"model {model} requires a --weights file")
        if weights is not None:
            if not Path(weights).exists():
                raise FileNotFoundError(weights)
            rel_weights = RelationWeights.from_tsv(weights, graph)

    if model in ("deepwalk", "brw"):
        table = _walk_model(graph, model, seed, section, overrides, rel_weights)
    elif model == "hybrid":
        dw_path = out / "deepwalk.emb.tsv"
        brw_path = out / "brw.emb.tsv"
        dw = (emb.EmbeddingTable.load_tsv(dw_path) if dw_path.exists()
              else _walk_model(graph, "deepwalk", seed,
                               _section(config, "deepwalk"), overrides, None))
        brw = (emb.EmbeddingTable.load_tsv(brw_path) if brw_path.exists()
               else _walk_model(graph, "brw", seed,
                                _section(config, "brw"), overrides, rel_weights))
        table = emb.concat_embeddings(dw, brw)
        table.model = "hybrid"
    else:
        split_data = read_split(graph, out / "split")
        base = rgcn_mod.RgcnConfig()
        rc = rgcn_mod.RgcnConfig(
            hidden_dim=int(_opt(overrides, section, "hidden_dim", base.hidden_dim, int)),
            num_layers=int(_opt(overrides, section, "num_layers", base.num_layers, int)),
            learning_rate=float(_opt(overrides, section, "learning_rate",
                                     base.learning_rate, float)),
            weight_decay=float(_opt(overrides, section, "weight_decay",
                                    base.weight_decay, float)),
            epochs=int(_opt(overrides, section, "epochs", base.epochs, int)),
            patience=int(_opt(overrides, section, "patience", base.patience, int)),
            seed=seed,
        )
        params, table, log = rgcn_mod.train_rgcn(graph, split_data, rc)
        rgcn_mod.save_checkpoint(out / "rgcn.ckpt.npz", params, rc, log, graph)
        click.echo(f"best epoch {log.best_epoch}, "
                   f"validation AUC {log.best_val_auc:.4f}")
        table.model = "rgcn"

    table.save_tsv(out / f"{model}.emb.tsv")
    click.echo(f"wrote {model}.emb.tsv (dim={table.dim})")


def _scorer_for(model, table, graph, out):
    if model == "rgcn":
        params, _, _, entities, relations = rgcn_mod.load_checkpoint(out / "rgcn.ckpt.npz")
        eidx = {e: i for i, e in enumerate(entities)}
        ridx = {r: i for i, r in enumerate(relations)}
        vectors = np.array([table.vector(e) for e in entities])

        def scorer(t):
            h, r, o = graph.iri_triple(t)
            return float(np.sum(vectors[eidx[h]] * params.decoder[ridx[r]]
                                * vectors[eidx[o]]))
        return scorer

    def scorer(t):
        h, _, o = graph.iri_triple(t)
        return emb.score_edge_shallow(table, h, o)
    return scorer


@main.command("eval")
@click.option("--models", default="deepwalk,brw,hybrid,rgcn", show_default=True)
@click.option("--ground-truth", "ground_truth", required=True)
@click.option("--candidates", required=True)
@click.option("--ks", default="10,5", show_default=True)
@click.pass_context
@_guard
def eval_cmd(ctx, models, ground_truth, candidates, ks):
    """Link-prediction AUC plus ranking metrics for the named models."""
    out = ctx.obj["out"]
    graph = _ingested(ctx)
    split_data = read_split(graph, out / "split")
    k_list = tuple(int(k) for k in ks.split(","))
    truth = ev.load_ground_truth(ground_truth, known_entities=graph.entity_index)
    cand_list = [line.split("\t")[0] for line in
                 Path(candidates).read_text(encoding="utf-8").splitlines() if line]
    negatives = sample_negatives(graph, split_data.test, 1,
                                 seed=[ctx.obj["seed"], 9]).negatives

    results = {}
    for model in models.split(","):
        table = emb.EmbeddingTable.load_tsv(out / f"{model}.emb.tsv")
        auc_rep = ev.evaluate_link_prediction(
            _scorer_for(model, table, graph, out), split_data.test, negatives)
        rank_rep = ev.evaluate_ranking(table, truth, cand_list, ks=k_list)
        results[model] = (auc_rep, rank_rep)
        (out / f"metrics_{model}.json").write_text(json.dumps({
            "model": model,
            "auc": auc_rep.auc,
            **rank_rep.aggregates,
        }, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    md, csv = ev.emit_report(results)
    (out / "report.md").write_text(md, encoding="utf-8")
    (out / "report.csv").write_text(csv, encoding="utf-8")
    click.echo(csv.rstrip("\n"))


@main.command()
@click.option("--models", default="deepwalk,brw,hybrid,rgcn", show_default=True)
@click.pass_context
@_guard
def report(ctx, models):
    """Rebuild report.md / report.csv from saved per-model metrics."""
    out = ctx.obj["out"]
    lines = [",".join(ev.REPORT_COLUMNS)]
    rows = []
    for model in models.split(","):
        path = out / f"metrics_{model}.json"
        if not path.exists():
            raise FileNotFoundError(str(path))
        m = json.loads(path.read_text(encoding="utf-8"))
        rows.append((model, m["auc"], m["hits@10"], m["hits@5"], m["mrr"], m["ndcg@10"]))
    maxima = [max(r[c] for r in rows) for c in range(1, 6)]
    md = ["| " + " | ".join(ev.REPORT_COLUMNS) + " |", "|" + "---|" * 6]
    for row in rows:
        lines.append(row[0] + "," + ",".join(f"{v:.4f}" for v in row[1:]))
        cells = [row[0]] + [f"**{v:.4f}**" if v == m else f"{v:.4f}"
                            for v, m in zip(row[1:], maxima)]
        md.append("| " + " | ".join(cells) + " |")
    (out / "report.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "report.md").write_text("\n".join(md) + "\n", encoding="utf-8")
    click.echo("\n".join(lines))


@main.command()
@click.option("--embeddings", "embeddings_file", required=True)
@click.option("--query", required=True)
@click.option("--candidates", required=True)
@click.option("--top-k", "top_k", default=10, show_default=True)
@click.pass_context
@_guard
def recommend(ctx, embeddings_file, query, candidates, top_k):
    """Print the top-k candidates by cosine similarity to the query."""
    table = emb.EmbeddingTable.load_tsv(embeddings_file)
    if query not in table:
        near = sorted(
            table.entities,
            key=lambda e: -len(_common_prefix(e, query)),
        )[:5]
        raise UnknownEntityError(
            f"unknown query {query}; nearest known iris: {', '.join(near)}")
    cand_list = [line.split("\t")[0] for line in
                 Path(candidates).read_text(encoding="utf-8").splitlines() if line]
    ranked = emb.rank_candidates(table, query, cand_list, top_k=top_k)
    click.echo(ranked.to_csv().rstrip("\n"))


def _common_prefix(a, b):
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return a[:n]


@main.command()
@click.option("--model", type=click.Choice(("deepwalk", "brw", "rgcn")), required=True)
@click.option("--trials", default=20, show_default=True)
@click.option("--weights", default=None)
@click.pass_context
@_guard
def hpo(ctx, model, trials, weights):
    """Random-search hyperparameters, maximizing validation AUC."""
    out = ctx.obj["out"]
    seed = ctx.obj["seed"]
    graph = _ingested(ctx)
    split_data = read_split(graph, out / "split")
    val_negs = sample_negatives(graph, split_data.val, 1, seed=[seed, 11]).negatives
    rel_weights = None
    if model == "brw":
        if weights is None:
            raise KgrecError("brw search requires a --weights file")
        rel_weights = RelationWeights.from_tsv(weights, graph)

    def objective(params):
        if model == "rgcn":
            rc = rgcn_mod.RgcnConfig(seed=seed, epochs=100, patience=15, **params)
            _, _, log = rgcn_mod.train_rgcn(graph, split_data, rc)
            return log.best_val_auc
        wc = WalkConfig(walks_per_node=params["walks_per_node"],
                        walk_length=params["walk_length"], seed=seed)
        if model == "deepwalk":
            corpus = generate_uniform_walks(graph, wc)
        else:
            corpus = generate_biased_walks(graph, wc, rel_weights)
        sg = SkipGramConfig(dimension=params["dimension"],
                            window=params["window"], seed=seed)
        table = train_skipgram(corpus, sg, graph.entities)
        scores_pos = [emb.score_edge_shallow(table, *_ends(graph, t))
                      for t in split_data.val]
        scores_neg = [emb.score_edge_shallow(table, *_ends(graph, t))
                      for t in val_negs]
        return ev.auc(scores_pos, scores_neg).auc

    best, records = hpo_mod.run_search(objective, hpo_mod.DEFAULT_SPACES[model],
                                       trials, seed=seed)
    hpo_mod.write_study_csv(records, out / f"hpo_{model}.csv")
    parser = configparser.ConfigParser()
    parser[model] = {k: str(v) for k, v in best.items()}
    with open(out / f"hpo_{model}_best.ini", "w", encoding="utf-8") as f:
        parser.write(f)
    click.echo(f"best config: {best}")


def _ends(graph, t):
    h, _, o = graph.iri_triple(t)
    return h, o


@main.command()
@click.option("--entities", default=200, show_default=True)
@click.option("--communities", default=2, show_default=True)
@click.option("--queries", default=19, show_default=True)
@click.option("--intra-p", "intra_p", default=0.06, show_default=True)
@click.option("--relevance-p", "relevance_p", default=0.3, show_default=True)
@click.option("--noise-p", "noise_p", default=0.5, show_default=True)
@click.pass_context
@_guard
def synth(ctx, entities, communities, queries, intra_p, relevance_p, noise_p):
    """Generate a synthetic dataset (graph.nt, ground truth, candidates)."""
    spec = synth_mod.SyntheticSpec(
        n_entities=entities, n_communities=communities, n_queries=queries,
        intra_p=intra_p, relevance_p=relevance_p, noise_p=noise_p,
        seed=ctx.obj["seed"])
    triples, truth, query_iris, _ = synth_mod.write_dataset(spec, ctx.obj["out"])
    click.echo(f"{len(triples)} triples, {len(query_iris)} queries, "
               f"{sum(len(v) for v in truth.values())} ground-truth pairs")


if __name__ == "__main__":
    main()
