import { renderErrorPlot } from './errors.js';
import { runCli } from './io.js';

process.exit(runCli(process.argv.slice(2), 'plot_errors', renderErrorPlot));
