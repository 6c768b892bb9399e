"""
h2reduce - 穩定性保持的 H2 模型降階
主程式入口點
"""

import sys
import os
import argparse
import json
from dataclasses import asdict
from typing import List, Optional

# 添加 src 目錄到 Python 路徑
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

try:
    from src.core.app import ReductionApp
    from src.core.config import ReductionConfig
    from src.core.errors import ReductionError
except ImportError as e:
    print(f"Import error: {e}")
    print("請確保已安裝所有依賴套件：pip install -r requirements.txt")
    sys.exit(1)


def _orders(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"orders must be comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Stability-preserving H2 model reduction')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging and tracebacks')
    parser.add_argument('--quiet', action='store_true', help='Only log warnings and errors')
    parser.add_argument('--json', action='store_true', help='Print machine-readable JSON on stdout')
    parser.add_argument('--config', help='key=value configuration file (flags win)')
    parser.add_argument('--threads', type=int, help='Cap on parallel benchmark runs')
    parser.add_argument('--bt-method', choices=['match_dc', 'truncate'],
                        help='Balanced truncation variant (default: match_dc)')
    parser.add_argument('--stability-margin', type=float,
                        help='Required distance of all poles from the imaginary axis')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen', help='Generate a benchmark model')
    gen.add_argument('model', choices=['msd'])
    gen.add_argument('--n', type=int, required=True, help='State dimension (even, >= 4)')
    gen.add_argument('--out', required=True)

    red = sub.add_parser('reduce', help='Reduce a system file')
    red.add_argument('--input', required=True)
    red.add_argument('--order', type=int, required=True)
    red.add_argument('--method', choices=['bt', 'riemannian'], default='riemannian')
    red.add_argument('--out', required=True, help='Reduced model JSON {"J","R","B","C"}')
    red.add_argument('--report', help='RunReport JSON (default: <out>.report.json)')
    red.add_argument('--trace', help='Iteration trace CSV')
    red.add_argument('--init', help='Custom initial point (reduced model JSON)')
    red.add_argument('--max-iter', type=int)
    red.add_argument('--grad-tol', type=float)
    red.add_argument('--delta0', type=float)
    red.add_argument('--delta-bar', type=float)
    red.add_argument('--gamma-prime', type=float)
    red.add_argument('--perturbed-restart', action='store_true', default=None)

    ev = sub.add_parser('eval', help='Error norms between two systems')
    ev.add_argument('--full', required=True)
    ev.add_argument('--reduced', required=True)
    ev.add_argument('--norm', choices=['h2', 'hinf', 'both'], default='both')
    ev.add_argument('--linf', action='store_true',
                    help='Check the output error bound by simulation (sim_dt, sim_t_final)')
    ev.add_argument('--linf-trace', help='CSV of the input and output error (implies --linf)')

    bode = sub.add_parser('bode', help='Bode data CSV for one or more systems')
    bode.add_argument('--input', nargs='+', required=True)
    bode.add_argument('--wmin', type=float)
    bode.add_argument('--wmax', type=float)
    bode.add_argument('--points', type=int)
    bode.add_argument('--out', required=True)

    bench = sub.add_parser('bench', help='Reproduce the BT vs trust-region comparison tables')
    bench.add_argument('model', choices=['msd'])
    bench.add_argument('--n', type=int, default=50)
    bench.add_argument('--orders', type=_orders, default=[4, 6, 8, 10, 30])
    bench.add_argument('--out', required=True)

    check = sub.add_parser('check', help='Building-model comparison for a user-supplied file')
    check.add_argument('--building', help='System file (.json or .mat), n=48, m=p=1')
    check.add_argument('--order', type=int, default=3)
    return parser


def make_config(args: argparse.Namespace) -> ReductionConfig:
    """配置檔在下，命令列參數在上"""
    base = ReductionConfig.from_file(args.config) if args.config else ReductionConfig()
    trust_region = {}
    if args.command == 'reduce':
        trust_region = {
            'max_iters': args.max_iter,
            'grad_tol': args.grad_tol,
            'delta0': args.delta0,
            'delta_bar': args.delta_bar,
            'gamma_prime': args.gamma_prime,
            'perturbed_restart': args.perturbed_restart,
        }
    return base.with_overrides(
        trust_region=trust_region,
        debug=args.debug or None,
        quiet=(args.quiet or args.json) or None,
        threads=args.threads,
        bt_method=args.bt_method,
        stability_margin=args.stability_margin,
    )


def run(args: argparse.Namespace, app: ReductionApp):
    """執行子命令，回傳可序列化結果"""
    if args.command == 'gen':
        return {"path": str(app.cmd_gen(args.n, args.out))}
    if args.command == 'reduce':
        report = app.cmd_reduce(args.input, args.order, args.method, args.out,
                                report_path=args.report, trace_path=args.trace, init_path=args.init)
        return report.to_dict()
    if args.command == 'eval':
        return app.cmd_eval(args.full, args.reduced, args.norm, linf=args.linf, trace_path=args.linf_trace)
    if args.command == 'bode':
        return {"path": str(app.cmd_bode(args.input, args.out, args.wmin, args.wmax, args.points))}
    if args.command == 'bench':
        rows = app.cmd_bench(args.n, args.orders, args.out)
        return [{"r": row.r, "sigma_next": row.sigma_next,
                 "bt": asdict(row.bt), "proposed": asdict(row.proposed)} for row in rows]
    if args.command == 'check':
        return app.cmd_check(args.building, args.order)
    raise ValueError(f"unknown command {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    """主函數"""
    args = build_parser().parse_args(argv)

    try:
        app = ReductionApp(make_config(args))
        result = run(args, app)
    except KeyboardInterrupt:
        print("\n已中斷")
        return 130
    except ReductionError as e:
        print(f"Error ({type(e).__name__}): {e}", file=sys.stderr)
        if args.debug:
            import traceback
            traceback.print_exc()
        return e.exit_code
    except Exception as e:
        print(f"Unexpected error: {e}", file=sys.stderr)
        if args.debug:
            import traceback
            traceback.print_exc()
        return 1

    if args.json:
        print(json.dumps(result, indent=1))
    else:
        _print_summary(args.command, result)
    return 0


def _print_summary(command: str, result) -> None:
    if isinstance(result, list):
        print(f"{'r':>4} {'sigma_r+1':>12} {'H2 BT':>12} {'H2 prop':>12} "
              f"{'Hinf BT':>12} {'Hinf prop':>12} {'grad BT':>10} {'grad prop':>10}")
        for row in result:
            bt, prop = row["bt"], row["proposed"]
            print(f"{row['r']:>4} {row['sigma_next']:>12.5e} {bt['h2_error']:>12.5e} "
                  f"{prop['h2_error']:>12.5e} {bt['hinf_error']:>12.5e} {prop['hinf_error']:>12.5e} "
                  f"{bt['grad_norm_final']:>10.2e} {prop['grad_norm_final']:>10.2e}")
        return
    for key, value in result.items():
        print(f"{key}: {value}")


if __name__ == "__main__":
    sys.exit(main())
