# -*- coding: utf-8 -*-
#
# corrlab documentation build configuration file
#
# This file is execfile()d with the current directory set to its containing dir.

import sys, os

# the library lives next to this file
sys.path.insert(0, os.path.abspath('.'))

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.doctest', 'sphinx.ext.intersphinx',
              'sphinx.ext.todo', 'sphinx.ext.coverage', 'sphinx.ext.mathjax',
              'sphinx.ext.ifconfig', 'sphinx.ext.viewcode']
extensions.append('numpydoc')

import cloud_sptheme as csp

html_theme = "cloud"
html_theme_path = [csp.get_theme_dir()]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'corrlab'
copyright = u'2026'

import corrlab
version = corrlab.__version__.rsplit('.', 1)[0]
release = corrlab.__version__

exclude_patterns = ['_build']
pygments_style = 'sphinx'

# numpydoc lists class members itself
numpydoc_show_class_members = False

# -- Options for HTML output ---------------------------------------------------

html_static_path = ['_static']
htmlhelp_basename = 'corrlabdoc'

# -- Options for LaTeX output --------------------------------------------------

latex_documents = [
  ('index', 'corrlab.tex', u'corrlab Documentation', u'corrlab developers', 'manual'),
]

# -- Options for manual page output --------------------------------------------

man_pages = [
    ('index', 'corrlab', u'corrlab Documentation', [u'corrlab developers'], 1)
]

intersphinx_mapping = {'python': ('https://docs.python.org/3', None),
                       'numpy': ('https://numpy.org/doc/stable', None),
                       'scipy': ('https://docs.scipy.org/doc/scipy', None)}
